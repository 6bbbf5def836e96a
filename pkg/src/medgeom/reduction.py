"""Orthogonal reduction of the no-controls data matrix (1, X, M, Y).

A Householder QR of the n x 4 matrix with columns in the order
(1, X, M, Y) gives an upper-triangular block

    1  x1  m1  y1
    0  x2  m2  y2
    0  0   m3  y3
    0  0   0   y4

whose signs are fixed by reflection so that x2, m3, y4 > 0. Path
estimates and all test statistics are closed-form functions of these nine
numbers.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .dataset import Dataset
from .errors import CollinearityError, DomainError
from .estimation import RANK_TOL

_COLUMNS = ("intercept", "X", "M", "Y")


@dataclass(frozen=True)
class CanonicalCoords:
    """Nonzero entries of the reduced triangular block.

    The first row is scaled by the norm of the constant column, i.e.
    ``one_norm = sqrt(n)`` for the unit intercept; ``x1, m1, y1`` are the
    column sums divided by it. No global rescaling is applied, so a data
    matrix multiplied by ``gamma`` yields coordinates multiplied by
    ``gamma``.
    """

    one_norm: float
    x1: float
    x2: float
    m1: float
    m2: float
    m3: float
    y1: float
    y2: float
    y3: float
    y4: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GeometryPoint:
    r: float
    p: float
    q: float
    n: int
    sign_abd: int = 0
    sign_abc: int = 0

    def __post_init__(self):
        for name in ("r", "p", "q"):
            v = getattr(self, name)
            if not v >= 0.0:
                raise DomainError(f"{name} must be nonnegative, got {v}")
        for name in ("sign_abd", "sign_abc"):
            if getattr(self, name) not in (-1, 0, 1):
                raise DomainError(f"{name} must be -1, 0 or +1")

    def to_dict(self) -> dict:
        return asdict(self)


def canonical_reduce_columns(ones, x, m, y) -> CanonicalCoords:
    """Reduce explicit columns; ``ones`` need not be the unit vector."""
    D = np.column_stack([np.asarray(c, dtype=float) for c in (ones, x, m, y)])
    n = D.shape[0]
    if n < 4:
        raise CollinearityError(f"need at least 4 rows for rank 4, got {n}", _COLUMNS)
    R = np.linalg.qr(D, mode="r")
    col_norms = np.linalg.norm(D, axis=0)
    diag = np.abs(np.diag(R))
    bad = [_COLUMNS[j] for j in range(4) if col_norms[j] == 0.0 or diag[j] <= RANK_TOL * col_norms[j]]
    if bad:
        raise CollinearityError(f"data matrix (1, X, M, Y) has rank < 4; collinear: {', '.join(bad)}", bad)
    # reflect rows so the diagonal is positive
    R = (R * np.sign(np.diag(R))[:, None]).tolist()
    return CanonicalCoords(
        one_norm=R[0][0], x1=R[0][1], x2=R[1][1],
        m1=R[0][2], m2=R[1][2], m3=R[2][2],
        y1=R[0][3], y2=R[1][3], y3=R[2][3], y4=R[3][3],
        n=n,
    )


def canonical_reduce(ds: Dataset, outcome="Y", mediator="M", treatment="X", controls=()) -> CanonicalCoords:
    """Canonical coordinates of a no-controls mediation dataset.

    Rows with a missing value in any of the three variables are dropped.
    """
    if controls:
        raise DomainError("canonical reduction is defined only for the model without control variables")
    cols = [ds[treatment], ds[mediator], ds[outcome]]
    keep = ~np.any(np.isnan(np.column_stack(cols)), axis=1)
    x, m, y = (c[keep] for c in cols)
    return canonical_reduce_columns(np.ones(len(x)), x, m, y)


def coords_to_estimates(cc: CanonicalCoords):
    """Least-squares path estimates ``(a, b, c, d)`` from the coordinates."""
    a = cc.m2 / cc.x2
    b = cc.y3 / cc.m3
    c = cc.y2 / cc.x2
    d = (cc.m3 * cc.y2 - cc.m2 * cc.y3) / (cc.x2 * cc.m3)
    return a, b, c, d


def _sign(v) -> int:
    return int(np.sign(v))


def geometry_point(cc: CanonicalCoords) -> GeometryPoint:
    """Scale-free coordinates ``r = |m2|/m3, p = |y3|/y4, q = |y2|/y4``."""
    a, b, c, d = coords_to_estimates(cc)
    return GeometryPoint(
        r=abs(cc.m2) / cc.m3,
        p=abs(cc.y3) / cc.y4,
        q=abs(cc.y2) / cc.y4,
        n=cc.n,
        sign_abd=_sign(a * b * d),
        sign_abc=_sign(a * b * c),
    )


def statistics_from_point(pt: GeometryPoint) -> dict:
    """F statistics and the Sobel ratio implied by a geometry point.

    ``F_a = (n-2) r^2``, ``F_b = (n-3) p^2``, ``F_c = (n-2) q^2 / (p^2 + 1)``,
    ``F_d = (n-3) (q -/+ r p)^2 / (r^2 + 1)`` and
    ``|S| = (1/F_a + 1/F_b)^(-1/2)``.
    """
    n = pt.n
    F_a = (n - 2) * pt.r ** 2
    F_b = (n - 3) * pt.p ** 2
    F_c = (n - 2) * pt.q ** 2 / (pt.p ** 2 + 1.0)
    shift = -pt.r * pt.p if pt.sign_abc >= 0 else pt.r * pt.p
    F_d = (n - 3) * (pt.q + shift) ** 2 / (pt.r ** 2 + 1.0)
    if F_a == 0.0 or F_b == 0.0:
        S = 0.0
    else:
        S = 1.0 / math.sqrt(1.0 / F_a + 1.0 / F_b)
    return {"F_a": F_a, "F_b": F_b, "F_c": F_c, "F_d": F_d, "abs_sobel_S": S}


def realize_point(pt: GeometryPoint, rng: np.random.Generator = None):
    """Columns ``(x, m, y)`` of ``pt.n`` rows whose geometry point is ``pt``.

    The triangular block is taken with ``x2 = m3 = y4 = 1``, ``m2 = r`` and
    ``y3 = p``, so ``ab > 0``, and ``y2 = +/- q`` following ``sign_abc``;
    it is then embedded with a random orthonormal basis whose first vector
    is the normalized constant.
    """
    n = pt.n
    if n < 4:
        raise DomainError("need n >= 4")
    rng = rng or np.random.default_rng(0)
    sign_c = -1.0 if pt.sign_abc < 0 else 1.0
    R = np.array([
        [math.sqrt(n), 0.0, 0.0, 0.0],
        [0.0, 1.0, pt.r, sign_c * pt.q],
        [0.0, 0.0, 1.0, pt.p],
        [0.0, 0.0, 0.0, 1.0],
    ])
    basis = np.column_stack([np.ones(n), rng.standard_normal((n, 3))])
    Q, Rq = np.linalg.qr(basis)
    Q = Q * np.sign(np.diag(Rq))
    D = Q @ R
    return D[:, 1], D[:, 2], D[:, 3]
