"""Mediation typology and percent-contribution metrics.

The process-and-product (PAPA) rule classifies from the indirect and
direct tests alone. The causal-steps rule additionally requires a
significant total effect. A PAPA mediation type that the causal-steps rule
does not establish is an erroneous rejection by the total-effect gate.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateFitError, DomainError
from .estimation import FRAMEWORKS, MediationFit

TYPES = ("complementary", "competitive", "indirect_only", "none_established")
SUBTYPES = ("d_plementary", "d_petitive", "not_applicable")


@dataclass(frozen=True)
class TypologyVerdict:
    papa_type: str
    directional_subtype: str
    causal_steps_type: str
    erroneous_rejection: bool
    framework: str
    alpha: float
    annotation: str = ""

    @property
    def label(self) -> str:
        """Readable name, e.g. ``directionally competitive indirect-only``."""
        if self.papa_type == "none_established":
            return f"none established ({self.annotation})" if self.annotation else "none established"
        base = self.papa_type.replace("_", "-")
        if self.papa_type == "indirect_only" and self.directional_subtype != "not_applicable":
            word = "complementary" if self.directional_subtype == "d_plementary" else "competitive"
            return f"directionally {word} {base}"
        return base

    def to_dict(self) -> dict:
        d = asdict(self)
        d["label"] = self.label
        return d


def _sig(p, alpha) -> bool:
    # NaN p-values are never significant
    return bool(p < alpha)


def indirect_significant(fit: MediationFit, alpha: float, framework: str) -> bool:
    if framework == "LSE-Sobel":
        return _sig(fit.p_ab, alpha)
    return _sig(fit.p_a, alpha) and _sig(fit.p_b, alpha)


def classify(fit: MediationFit, alpha: float, framework: str = None) -> TypologyVerdict:
    """PAPA and causal-steps verdicts for one fit.

    ``framework`` defaults to the fit's own; it selects how the indirect
    effect is tested (joint a and b tests, or the Sobel test).
    """
    framework = framework or fit.framework
    if framework not in FRAMEWORKS:
        raise DomainError(f"unknown framework {framework!r}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")

    ab_sig = indirect_significant(fit, alpha, framework)
    d_sig = _sig(fit.p_d, alpha)
    c_sig = _sig(fit.p_c, alpha)
    s = int(np.sign(fit.a_hat * fit.b_hat * fit.d_hat))

    if ab_sig and d_sig:
        papa = "complementary" if s > 0 else ("competitive" if s < 0 else "none_established")
    elif ab_sig:
        papa = "indirect_only"
    else:
        papa = "none_established"

    if papa == "indirect_only":
        subtype = {1: "d_plementary", -1: "d_petitive"}.get(s, "not_applicable")
    else:
        subtype = "not_applicable"

    causal = papa if c_sig else "none_established"
    annotation = ""
    if papa == "none_established":
        annotation = "direct_only" if d_sig else "no_effect"

    return TypologyVerdict(
        papa_type=papa,
        directional_subtype=subtype,
        causal_steps_type=causal,
        erroneous_rejection=papa != "none_established" and causal == "none_established",
        framework=framework,
        alpha=float(alpha),
        annotation=annotation,
    )


@dataclass(frozen=True)
class ContributionReport:
    """Percentage coefficients ``b_p`` and percent contributions ``c_p``.

    ``c_p`` values are fractions of ``|b_p(c)|`` (multiply by 100 for %).
    """

    bp_a: float
    bp_b: float
    bp_ab: float
    bp_d: float
    bp_c: float
    cp_a: float
    cp_b: float
    cp_ab: float
    cp_d: float
    cp_c: float

    def to_dict(self) -> dict:
        return asdict(self)


def percent_contributions(fit: MediationFit = None, *, a=None, b=None, d=None, c=None, ab=None) -> ContributionReport:
    """Contributions of each path relative to the total effect.

    Coefficients are read from ``fit`` unless given as keywords. All
    variables are assumed to be on 0-1 percentage scales, so the
    coefficients are percentage coefficients. ``ab`` defaults to ``a * b``.
    """
    if fit is not None:
        a = fit.a_hat if a is None else a
        b = fit.b_hat if b is None else b
        d = fit.d_hat if d is None else d
        c = fit.c_hat if c is None else c
    if any(v is None for v in (a, b, d, c)):
        raise DomainError("a, b, d and c are all required")
    ab = a * b if ab is None else ab
    if c == 0.0 or math.isnan(c):
        raise DegenerateFitError("percent contributions are undefined when the total effect is zero")
    scale = abs(c)
    cp_ab = ab / scale
    split = abs(a) + abs(b)
    if split == 0.0:
        raise DegenerateFitError("the a/b split is undefined when both a and b are zero")
    return ContributionReport(
        bp_a=a, bp_b=b, bp_ab=ab, bp_d=d, bp_c=c,
        cp_a=abs(a) / split * cp_ab,
        cp_b=abs(b) / split * cp_ab,
        cp_ab=cp_ab,
        cp_d=d / scale,
        cp_c=c / scale,
    )
