"""Time the numba kernels against their pure-numpy/Python counterparts.

Run: python3 benchmarks/bench_kernels.py [--repeat 5] [--study 300]

Covers the LAD solver, the superfluity grid scan, the F tail probability
and a small end-to-end study run in a subprocess with and without
MEDGEOM_DISABLE_NUMBA.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from medgeom import distributions as dist
from medgeom import geometry as geo
from medgeom._accel import HAS_NUMBA
from medgeom.estimation import LAD_EPS, LAD_MAX_ITER, LAD_TOL
from medgeom.lad import lad_solve_numba, lad_solve_numpy


def best_time(func, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        func()
        times.append(time.perf_counter() - t0)
    return min(times)


def lad_problems(count=200, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(10, 101))
        X = np.column_stack([np.ones(n), rng.standard_normal((n, 2))])
        y = X @ rng.uniform(-1, 1, 3) + rng.standard_normal(n)
        out.append((X, y))
    return out


def bench_lad(repeat):
    problems = lad_problems()

    def run(solver):
        return lambda: [solver(X, y, LAD_EPS, LAD_MAX_ITER, LAD_TOL, 50 * len(y)) for X, y in problems]

    run(lad_solve_numba)()
    return best_time(run(lad_solve_numba), repeat), best_time(run(lad_solve_numpy), repeat)


def bench_scan(repeat, density=200):
    cv = geo.critical_values(50, 0.05)
    args = (cv.r_crit, cv.p_crit, density, geo.SCAN_R_FACTOR, geo.SCAN_P_FACTOR)
    geo._scan_numba(*args)
    return best_time(lambda: geo._scan_numba(*args), repeat), best_time(lambda: geo._scan_numpy(*args), repeat)


def bench_f_tail(repeat, count=20000):
    rng = np.random.default_rng(1)
    stats = rng.exponential(3.0, count)
    d2 = rng.integers(5, 200, count).astype(float)
    fast = dist.f_sf_kernel
    slow = getattr(fast, "py_func", fast)

    def run(kernel):
        return lambda: [kernel(s, 1.0, d) for s, d in zip(stats, d2)]

    run(fast)()
    return best_time(run(fast), repeat), best_time(run(slow), repeat)


STUDY = "from medgeom.simulation import SimulationConfig, run_study; run_study(SimulationConfig(replicates={n}))"


def bench_study(replicates):
    def run(disabled):
        env = dict(os.environ, MEDGEOM_DISABLE_NUMBA="1" if disabled else "0")
        t0 = time.perf_counter()
        subprocess.run([sys.executable, "-c", STUDY.format(n=replicates)], env=env, check=True)
        return time.perf_counter() - t0

    run(False)  # populate the numba cache
    return run(False), run(True)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--study", type=int, default=300, help="replicates for the end-to-end run (0 to skip)")
    args = ap.parse_args(argv)
    if not HAS_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1
    rows = [
        ("LAD solver, 200 problems", *bench_lad(args.repeat)),
        ("grid scan, density 200", *bench_scan(args.repeat)),
        ("F tail, 20000 calls", *bench_f_tail(args.repeat)),
    ]
    if args.study:
        rows.append((f"study, {args.study} replicates (incl. startup)", *bench_study(args.study)))
    print(f"{'kernel':<42}{'numba s':>10}{'numpy s':>10}{'speedup':>10}")
    for name, fast, slow in rows:
        print(f"{name:<42}{fast:>10.4f}{slow:>10.4f}{slow / fast:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
