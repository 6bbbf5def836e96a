"""Rejection regions in the scale-free (r, p, q) coordinates.

With critical values ``r_crit = sqrt(lam_{n-2} / (n-2))`` and
``p_crit = sqrt(lam_{n-3} / (n-3))`` the four F tests and the Sobel test
reject exactly on

    Ra:  r > r_crit
    Rb:  p > p_crit
    Rc:  q > r_crit * sqrt(p^2 + 1)
    Rd:  |q - r p| > p_crit * sqrt(r^2 + 1)     if abc >= 0
         |q + r p| > p_crit * sqrt(r^2 + 1)     if abc <  0
    Rab_sobel:  1/((n-2) r^2) + 1/((n-3) p^2) < 1/z^2

All inequalities are strict, so boundary points are outside a region.

Sign contexts are tied to the coordinates: when abc > 0 the sign of abd is
the sign of ``q - r p``; when abc <= 0 the product abd is negative.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import distributions as dist
from ._accel import compile_kernel, pick
from .errors import BoundaryUndefinedError, DomainError, WitnessNotFoundError
from .reduction import GeometryPoint

MIN_GRID_DENSITY = 100
SCAN_R_FACTOR = 10.0
SCAN_P_FACTOR = 10.0


@dataclass(frozen=True)
class CriticalValues:
    n: int
    alpha: float
    r_crit: float
    p_crit: float
    z_half: float
    lambda_a: float = math.nan
    lambda_b: float = math.nan

    def to_dict(self) -> dict:
        return asdict(self)


def critical_values(n: int, alpha: float) -> CriticalValues:
    if n < 4:
        raise DomainError(f"n must be at least 4, got {n}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    lam_a = dist.f_upper_critical(n - 2, alpha)
    lam_b = dist.f_upper_critical(n - 3, alpha)
    return CriticalValues(
        n=int(n), alpha=float(alpha),
        r_crit=math.sqrt(lam_a / (n - 2)),
        p_crit=math.sqrt(lam_b / (n - 3)),
        z_half=dist.z_half(alpha),
        lambda_a=lam_a, lambda_b=lam_b,
    )


class Region(enum.Enum):
    Ra = "Ra"
    Rb = "Rb"
    Rc = "Rc"
    Rd = "Rd"
    Rab_sobel = "Rab_sobel"


@dataclass(frozen=True)
class RegionId:
    region: Region
    complement: bool = False

    @classmethod
    def parse(cls, text) -> "RegionId":
        """``"Rc"`` or ``"~Rc"`` (complement)."""
        if isinstance(text, RegionId):
            return text
        if isinstance(text, Region):
            return cls(text)
        t = str(text).strip()
        comp = t.startswith("~")
        try:
            return cls(Region(t.lstrip("~")), comp)
        except ValueError:
            raise DomainError(f"unknown region {text!r}") from None

    def __str__(self):
        return ("~" if self.complement else "") + self.region.value


def _in_region(region: Region, r, p, q, sign_abc, n, cv: CriticalValues) -> bool:
    if region is Region.Ra:
        return r > cv.r_crit
    if region is Region.Rb:
        return p > cv.p_crit
    if region is Region.Rc:
        return q > cv.r_crit * math.sqrt(p * p + 1.0)
    if region is Region.Rd:
        gap = q - r * p if sign_abc >= 0 else q + r * p
        return abs(gap) > cv.p_crit * math.sqrt(r * r + 1.0)
    if r == 0.0 or p == 0.0:
        return False
    return 1.0 / ((n - 2) * r * r) + 1.0 / ((n - 3) * p * p) < 1.0 / (cv.z_half * cv.z_half)


def in_region(pt: GeometryPoint, region, cv: CriticalValues) -> bool:
    """Exact membership of ``pt`` in a rejection region or its complement."""
    if pt.n != cv.n:
        raise DomainError(f"point has n={pt.n} but critical values are for n={cv.n}")
    rid = RegionId.parse(region)
    inside = _in_region(rid.region, pt.r, pt.p, pt.q, pt.sign_abc, pt.n, cv)
    return inside != rid.complement


def memberships(pt: GeometryPoint, cv: CriticalValues) -> dict:
    return {reg.value: in_region(pt, RegionId(reg), cv) for reg in Region}


def sign_context_consistent(pt: GeometryPoint) -> bool:
    """Whether the point's two sign labels can come from one dataset."""
    if pt.sign_abc > 0:
        return pt.sign_abd == int(np.sign(pt.q - pt.r * pt.p))
    if pt.r == 0.0 or pt.p == 0.0:
        return pt.sign_abd == 0 and pt.sign_abc == 0
    if pt.sign_abc == 0:
        return pt.q == 0.0 and pt.sign_abd == -1
    return pt.q > 0.0 and pt.sign_abd == -1


def p0_boundary(r: float, n: int, alpha: float) -> float:
    """Sobel boundary ``p0(r)``: the point is in Rab_sobel iff ``p > p0(r)``."""
    z = dist.z_half(alpha)
    lhs = (n - 2) * r * r
    if not lhs > z * z:
        raise BoundaryUndefinedError(
            f"p0(r) is defined only when (n-2) r^2 > z^2; got {lhs} <= {z * z}"
        )
    inv = 1.0 / (z * z) - 1.0 / lhs
    return 1.0 / math.sqrt((n - 3) * inv)


def r0_threshold(n: int, alpha: float) -> float:
    """``z_{alpha/2} / sqrt(n - 2)``: the Sobel region needs ``r`` above this."""
    return dist.z_half(alpha) / math.sqrt(n - 2)


def r_crit_over_r0(n: int, alpha: float) -> float:
    """Ratio ``r_crit / r0(n)``; it tends to 1 as ``n`` grows."""
    return critical_values(n, alpha).r_crit / r0_threshold(n, alpha)


# ----------------------------------------------------------------- witnesses

SUBTYPES = ("d_plementary", "d_petitive")


def _normalize_subtype(subtype: str) -> str:
    s = subtype.replace("-", "_").lower()
    if s not in SUBTYPES:
        raise DomainError(f"subtype must be one of {SUBTYPES}, got {subtype!r}")
    return s


def _check_witness(pt: GeometryPoint, cv: CriticalValues, required) -> bool:
    if not sign_context_consistent(pt):
        return False
    return all(in_region(pt, reg, cv) for reg in required)


INDIRECT_ONLY = ("Ra", "Rb", "~Rd", "~Rc")
COMPETITIVE = ("Ra", "Rb", "Rd", "~Rc")
SOBEL_INDIRECT_ONLY = ("Rab_sobel", "~Rd", "~Rc")


def witness_indirect_only(n: int, alpha: float, subtype: str = "d_plementary", sign_abc=None) -> GeometryPoint:
    """A point where a and b are significant but neither d nor c is.

    ``d_plementary`` points lie in the ``abc > 0`` context with ``q > r p``.
    ``d_petitive`` points use ``sign_abc = -1`` by default; pass ``+1`` for
    the ``q < r p`` branch.
    """
    if n < 5:
        raise DomainError(f"n must be at least 5, got {n}")
    subtype = _normalize_subtype(subtype)
    cv = critical_values(n, alpha)
    rc, pc = cv.r_crit, cv.p_crit

    if subtype == "d_plementary":
        if sign_abc not in (None, 1):
            raise DomainError("d_plementary points require sign_abc = +1")
        r = 0.5 * (rc + rc * math.sqrt(1.0 + 1.0 / (pc * pc)))
        p = 0.5 * (pc + rc / math.sqrt(r * r - rc * rc))
        room = min(rc * math.sqrt(p * p + 1.0) - r * p, pc * math.sqrt(r * r + 1.0))
        pt = GeometryPoint(r, p, r * p + 0.5 * room, n, sign_abd=1, sign_abc=1)
    else:
        sign_abc = -1 if sign_abc is None else int(sign_abc)
        if sign_abc not in (-1, 1):
            raise DomainError("sign_abc must be +1 or -1")
        r = 1.5 * rc
        p = 0.5 * (pc + pc * math.sqrt(r * r + 1.0) / r)
        if sign_abc < 0:
            q = 0.5 * min(rc * math.sqrt(p * p + 1.0), -r * p + pc * math.sqrt(r * r + 1.0))
        else:
            q = 0.5 * min(r * p, rc * math.sqrt(p * p + 1.0))
        pt = GeometryPoint(r, p, q, n, sign_abd=-1, sign_abc=sign_abc)

    if not _check_witness(pt, cv, INDIRECT_ONLY):
        raise WitnessNotFoundError(f"indirect-only construction failed at n={n}, alpha={alpha}: {pt}")
    return pt


def witness_competitive(n: int, alpha: float, sign_abc: int = 1) -> GeometryPoint:
    """A point where a, b and d are significant (abd < 0) but c is not.

    The point also lies in the Sobel region with ``(n-2) r^2 > z^2`` and
    ``p > p0(r)``, so it serves the Sobel framework too.
    """
    if n < 5:
        raise DomainError(f"n must be at least 5, got {n}")
    sign_abc = int(sign_abc)
    if sign_abc not in (-1, 1):
        raise DomainError("sign_abc must be +1 or -1")
    cv = critical_values(n, alpha)
    rc, pc = cv.r_crit, cv.p_crit
    r = 2.0 * max(rc, r0_threshold(n, alpha))
    p = 2.0 * max(pc * math.sqrt(r * r + 1.0) / r, p0_boundary(r, n, alpha), pc)
    rc_bound = rc * math.sqrt(p * p + 1.0)
    d_bound = pc * math.sqrt(r * r + 1.0)
    if sign_abc > 0:
        # q < rp - d_bound keeps d significant on the q < rp side
        q = 0.5 * min(r * p - d_bound, rc_bound)
    else:
        lo = max(0.0, d_bound - r * p)
        q = 0.5 * (lo + rc_bound)
    pt = GeometryPoint(r, p, q, n, sign_abd=-1, sign_abc=sign_abc)
    if not _check_witness(pt, cv, COMPETITIVE + ("Rab_sobel",)):
        raise WitnessNotFoundError(f"competitive construction failed at n={n}, alpha={alpha}: {pt}")
    return pt


def _sobel_candidates(r, p, n, cv):
    rc, pc = cv.r_crit, cv.p_crit
    d_bound = pc * math.sqrt(r * r + 1.0)
    rc_bound = rc * math.sqrt(p * p + 1.0)
    # abc < 0 branch: q + rp <= d_bound
    top = min(rc_bound, d_bound - r * p)
    if top > 0.0:
        yield GeometryPoint(r, p, 0.5 * top, n, sign_abd=-1, sign_abc=-1)
    # abc > 0 branch: |q - rp| <= d_bound, q <= rc_bound
    lo = max(0.0, r * p - d_bound)
    hi = min(r * p + d_bound, rc_bound)
    if hi > lo:
        q = 0.5 * (lo + hi)
        s = int(np.sign(q - r * p))
        if s != 0 and q > 0.0:
            yield GeometryPoint(r, p, q, n, sign_abd=s, sign_abc=1)


def witness_sobel_io(n: int, alpha: float, grid: int = 200) -> GeometryPoint:
    """A point where the Sobel test rejects but neither d nor c does.

    Uses ``r^2 = 2 z^2 / (n-2)`` with ``p`` between ``p0(r)`` and
    ``p_crit sqrt(r^2+1) / r`` when that interval is open and the sample is
    large enough; otherwise a deterministic grid (log-spaced r, linear p).
    """
    if n < 5:
        raise DomainError(f"n must be at least 5, got {n}")
    cv = critical_values(n, alpha)
    z = cv.z_half
    r = math.sqrt(2.0 * z * z / (n - 2))
    if math.sqrt(n - 3) * cv.p_crit >= 0.5 * z and r < 1.0 / 3.0:
        p_lo = p0_boundary(r, n, alpha)
        p_hi = cv.p_crit * math.sqrt(r * r + 1.0) / r
        if p_lo < p_hi:
            p = 0.5 * (p_lo + p_hi)
            q = 0.5 * min(cv.r_crit * math.sqrt(p * p + 1.0), -r * p + cv.p_crit * math.sqrt(r * r + 1.0))
            pt = GeometryPoint(r, p, q, n, sign_abd=-1, sign_abc=-1)
            if _check_witness(pt, cv, SOBEL_INDIRECT_ONLY):
                return pt

    r_lo = r0_threshold(n, alpha)
    for rv in np.geomspace(r_lo, SCAN_R_FACTOR * max(cv.r_crit, r_lo), grid + 1)[1:]:
        rv = float(rv)
        if not (n - 2) * rv * rv > z * z:
            continue
        p_lo = p0_boundary(rv, n, alpha)
        for pv in np.linspace(p_lo, p_lo + SCAN_P_FACTOR * cv.p_crit, grid + 1)[1:]:
            for pt in _sobel_candidates(rv, float(pv), n, cv):
                if _check_witness(pt, cv, SOBEL_INDIRECT_ONLY):
                    return pt
    raise WitnessNotFoundError(f"no Sobel indirect-only point found on the grid at n={n}, alpha={alpha}")


# ------------------------------------------------------- superfluity scan


@compile_kernel
def _scan_numba(r_crit, p_crit, density, r_factor, p_factor):
    violations = 0
    in_abd = 0
    first = np.full(3, np.nan)
    steps = np.arange(1, density + 1) / density
    for i in range(density):
        r = r_crit + (r_factor - 1.0) * r_crit * steps[i]
        d_bound = p_crit * np.sqrt(r * r + 1.0)
        for j in range(density):
            p = p_factor * p_crit * steps[j]
            if not p > p_crit:
                continue
            rp = r * p
            rc_bound = r_crit * np.sqrt(p * p + 1.0)
            q_hi = max(rp + 2.0 * d_bound, 2.0 * rc_bound)
            for k in range(density):
                q = rp + (q_hi - rp) * steps[k]
                if abs(q - rp) > d_bound:
                    in_abd += 1
                    if not q > rc_bound:
                        if violations == 0:
                            first[0] = r
                            first[1] = p
                            first[2] = q
                        violations += 1
    return violations, in_abd, first


def _scan_numpy(r_crit, p_crit, density, r_factor, p_factor):
    steps = np.arange(1, density + 1) / density
    rs = r_crit + (r_factor - 1.0) * r_crit * steps
    ps = p_factor * p_crit * steps
    ps = ps[ps > p_crit]
    violations = 0
    in_abd = 0
    first = np.full(3, np.nan)
    rc_bound = r_crit * np.sqrt(ps * ps + 1.0)
    for r in rs:
        d_bound = p_crit * np.sqrt(r * r + 1.0)
        rp = r * ps
        q_hi = np.maximum(rp + 2.0 * d_bound, 2.0 * rc_bound)
        q = rp[:, None] + (q_hi - rp)[:, None] * steps[None, :]
        hit = np.abs(q - rp[:, None]) > d_bound
        bad = hit & ~(q > rc_bound[:, None])
        in_abd += int(hit.sum())
        nb = int(bad.sum())
        if nb and violations == 0:
            j, k = np.argwhere(bad)[0]
            first[:] = (r, ps[j], q[j, k])
        violations += nb
    return violations, in_abd, first


scan_kernel = pick(_scan_numba, _scan_numpy)


@dataclass
class SuperfluityReport:
    n: int
    alpha: float
    grid_density: int
    r_bounds: tuple
    p_bounds: tuple
    q_rule: str
    points_scanned: int
    points_in_ab_d: int
    violations: int
    first_violation: tuple = None
    critical: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def verify_complementary_superfluous(n: int, alpha: float, grid_density: int = 500) -> SuperfluityReport:
    """Grid check that Ra, Rb and Rd together imply Rc when ``q > r p``.

    r runs over ``(r_crit, 10 r_crit]`` and p over ``(0, 10 p_crit]``
    (points with ``p <= p_crit`` are outside Rb and skipped); at each
    ``(r, p)`` q runs over ``(r p, max(r p + 2 p_crit sqrt(r^2+1),
    2 r_crit sqrt(p^2+1))]``, which brackets both the Rd and Rc boundaries.
    """
    if grid_density < MIN_GRID_DENSITY:
        raise DomainError(f"grid_density must be at least {MIN_GRID_DENSITY}, got {grid_density}")
    cv = critical_values(n, alpha)
    violations, in_abd, first = scan_kernel(cv.r_crit, cv.p_crit, int(grid_density), SCAN_R_FACTOR, SCAN_P_FACTOR)
    steps = np.arange(1, grid_density + 1) / grid_density
    n_p = int(np.count_nonzero(SCAN_P_FACTOR * cv.p_crit * steps > cv.p_crit))
    return SuperfluityReport(
        n=n, alpha=alpha, grid_density=int(grid_density),
        r_bounds=(cv.r_crit, SCAN_R_FACTOR * cv.r_crit),
        p_bounds=(0.0, SCAN_P_FACTOR * cv.p_crit),
        q_rule="(rp, max(rp + 2 p_crit sqrt(r^2+1), 2 r_crit sqrt(p^2+1))]",
        points_scanned=grid_density * n_p * grid_density,
        points_in_ab_d=int(in_abd),
        violations=int(violations),
        first_violation=None if violations == 0 else tuple(float(v) for v in first),
        critical=cv.to_dict(),
    )


# ------------------------------------------------------------ boundaries


@dataclass
class BoundarySamples:
    """Boundary polylines in the (p, q) plane at fixed ``r``.

    NaN marks p values where a curve is undefined or would be negative.
    """

    n: int
    alpha: float
    r: float
    p: np.ndarray
    curves: dict

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(self.curves)
        w.writerow(["p", *names])
        for i, pv in enumerate(self.p):
            w.writerow([repr(float(pv))] + ["" if np.isnan(self.curves[c][i]) else repr(float(self.curves[c][i])) for c in names])
        return buf.getvalue()

    def to_dict(self) -> dict:
        def clean(a):
            return [None if np.isnan(v) else float(v) for v in a]

        return {
            "n": self.n, "alpha": self.alpha, "r": self.r,
            "p": clean(self.p),
            "curves": {k: clean(v) for k, v in self.curves.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def region_boundary_samples(n: int, alpha: float, r: float, p_max: float, count: int = 200) -> BoundarySamples:
    """Sample region boundaries on ``p`` in ``[0, p_max]`` at fixed ``r``.

    Curves: ``Rc`` (q = r_crit sqrt(p^2+1)), ``Rd_upper`` (q = rp + p_crit
    sqrt(r^2+1)), ``Rd_lower`` (q = rp - p_crit sqrt(r^2+1)) for abc >= 0,
    ``Rd_abc_neg`` (q = p_crit sqrt(r^2+1) - rp) for abc < 0, and the
    diagonal ``q = rp`` separating the two abd signs when abc > 0.
    """
    if not r > 0:
        raise DomainError(f"r must be positive, got {r}")
    if not p_max > 0:
        raise DomainError(f"p_max must be positive, got {p_max}")
    if count < 2:
        raise DomainError("count must be at least 2")
    cv = critical_values(n, alpha)
    p = np.linspace(0.0, p_max, count)
    d_bound = cv.p_crit * math.sqrt(r * r + 1.0)

    def nonneg(v):
        return np.where(v >= 0.0, v, np.nan)

    curves = {
        "Rc": cv.r_crit * np.sqrt(p * p + 1.0),
        "Rd_upper": r * p + d_bound,
        "Rd_lower": nonneg(r * p - d_bound),
        "Rd_abc_neg": nonneg(d_bound - r * p),
        "q_eq_rp": r * p,
    }
    return BoundarySamples(n=n, alpha=alpha, r=float(r), p=p, curves=curves)
