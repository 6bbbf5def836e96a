"""Write a synthetic survey extract with the HINTS 2020 shape.

3865 rows; per-variable non-missing counts and the complete-case counts of
both example models match the published extract. Values come from a
made-up latent model on each variable's natural scale; they are not survey
data.

    python3 scripts/make_synthetic_hints.py [--seed 5] [--out path.csv]
"""

import argparse
import csv
from pathlib import Path

import numpy as np

N_ROWS = 3865
COLUMNS = ("SM", "PD", "CG", "Age", "Income", "Edu", "PA", "EM", "Gender")
NONMISSING = {"SM": 3821, "PD": 3810, "CG": 3738, "Age": 3738, "Income": 3448,
              "Edu": 3722, "PA": 3739, "EM": 3778, "Gender": 3765}
MODEL1 = ("SM", "PD", "CG", "Age", "Income", "Edu")
MODEL2 = ("PA", "PD", "EM", "Age", "Gender", "Edu")
MODEL1_N = 3267
MODEL2_N = 3594

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "medgeom" / "data" / "hints_synthetic.csv"


def missing_rows(rng):
    """Row indices (before shuffling) left blank in each column."""
    r = np.arange
    income_extra = rng.choice(442, size=261, replace=False)
    return {
        "PD": r(0, 55),
        "Age": r(55, 182),
        "Edu": np.concatenate([r(182, 271), r(0, 54)]),
        "PA": r(0, 126),
        "EM": r(0, 87),
        "Gender": r(0, 100),
        "CG": r(271, 398),
        "SM": r(398, 442),
        "Income": np.concatenate([r(442, 598), income_extra]),
    }


def latent_values(rng, n):
    age = np.clip(np.round(rng.normal(57, 17, n)), 18, 104)
    edu = np.clip(np.round(rng.normal(4.9, 1.6, n)), 1, 7)
    income = np.clip(np.round(rng.normal(3.5 + 0.45 * edu, 2.0)), 1, 9)
    gender = rng.choice([1, 2], size=n, p=[0.41, 0.59])
    em = (rng.random(n) < 1 / (1 + np.exp(0.06 * (age - 57)))).astype(float)
    cg = np.clip(np.round(rng.exponential(0.25, n) * (rng.random(n) < 0.15) * 8), 0, 5)
    z = rng.normal(size=n)
    pd_latent = 0.55 + 0.8 * cg / 5 - 0.35 * em - 0.004 * (age - 57) + 0.9 * z
    pd = np.clip(np.round(pd_latent), 0, 4)
    sm_latent = 0.25 + 0.4 * pd / 4 - 0.1 * cg / 5 - 0.04 * (edu - 5) + 0.55 * rng.normal(size=n)
    sm = np.clip(np.round(sm_latent), 0, 3)
    # right-skewed minutes per week; the mean falls with distress
    pa_mean = 160.0 - 78.0 * pd / 4 + 6.0 * em
    pa = np.clip(np.round(rng.gamma(0.45, pa_mean / 0.45) / 5) * 5, 0, 4620)
    return {"SM": sm, "PD": pd, "CG": cg, "Age": age, "Income": income,
            "Edu": edu, "PA": pa, "EM": em, "Gender": gender.astype(float)}


def build(seed=5):
    rng = np.random.default_rng(seed)
    values = latent_values(rng, N_ROWS)
    for name, rows in missing_rows(rng).items():
        values[name][rows] = np.nan
    order = rng.permutation(N_ROWS)
    values = {k: v[order] for k, v in values.items()}

    for k, v in values.items():
        assert np.count_nonzero(~np.isnan(v)) == NONMISSING[k], k
    for cols, n in ((MODEL1, MODEL1_N), (MODEL2, MODEL2_N)):
        ok = np.all([~np.isnan(values[c]) for c in cols], axis=0)
        assert ok.sum() == n, (cols, ok.sum())
    return values


def write(values, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for i in range(N_ROWS):
            w.writerow(["" if np.isnan(values[c][i]) else f"{values[c][i] + 0.0:g}" for c in COLUMNS])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=5)
    ap.add_argument("--out", default=str(DEFAULT_OUT))
    args = ap.parse_args()
    write(build(args.seed), args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
