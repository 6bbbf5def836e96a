import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from medgeom.errors import DegenerateFitError, DomainError
from medgeom.estimation import MediationFit, fit_lse_columns
from medgeom.typology import classify, percent_contributions

from conftest import random_columns

# p < .001 entries are fed as .0005
MODEL_1 = MediationFit(a_hat=0.1631, b_hat=0.1012, d_hat=-0.0167, c_hat=0.000014,
                       p_a=0.0005, p_b=0.0005, p_d=0.6411, p_c=0.9997)
MODEL_2 = MediationFit(a_hat=-0.0656, b_hat=-0.1552, d_hat=0.0243, c_hat=0.0342,
                       p_a=0.0005, p_b=0.0005, p_d=0.2704, p_c=0.1169)


def test_model_1_is_directionally_competitive_indirect_only():
    v = classify(MODEL_1, 0.05)
    assert (v.papa_type, v.directional_subtype, v.causal_steps_type) == ("indirect_only", "d_petitive", "none_established")
    assert v.erroneous_rejection
    assert v.label == "directionally competitive indirect-only"


def test_model_2_is_directionally_complementary_indirect_only():
    v = classify(MODEL_2, 0.05)
    assert (v.papa_type, v.directional_subtype) == ("indirect_only", "d_plementary")
    assert v.erroneous_rejection
    assert v.label == "directionally complementary indirect-only"


def test_nothing_significant():
    f = MediationFit(a_hat=1, b_hat=1, d_hat=1, c_hat=2, p_a=0.3, p_b=0.5, p_d=0.7, p_c=0.9)
    v = classify(f, 0.05)
    assert v.papa_type == "none_established" and not v.erroneous_rejection
    assert v.annotation == "no_effect"
    f2 = MediationFit(a_hat=1, b_hat=1, d_hat=1, c_hat=2, p_a=0.3, p_b=0.5, p_d=0.01, p_c=0.01)
    assert classify(f2, 0.05).annotation == "direct_only"


def test_complementary_and_competitive_types():
    base = dict(p_a=0.001, p_b=0.001, p_d=0.001, p_c=0.001)
    assert classify(MediationFit(a_hat=1, b_hat=1, d_hat=1, c_hat=2, **base), 0.05).papa_type == "complementary"
    v = classify(MediationFit(a_hat=1, b_hat=1, d_hat=-1, c_hat=0.0, **{**base, "p_c": 0.9}), 0.05)
    assert v.papa_type == "competitive" and v.erroneous_rejection


def test_strict_inequality_and_nan():
    f = MediationFit(a_hat=1, b_hat=1, d_hat=1, c_hat=2, p_a=0.05, p_b=0.001, p_d=0.9, p_c=0.9)
    assert classify(f, 0.05).papa_type == "none_established"
    g = MediationFit(a_hat=1, b_hat=1, d_hat=1, c_hat=2, p_a=0.001, p_b=0.001, p_d=math.nan, p_c=math.nan)
    assert classify(g, 0.05).papa_type == "indirect_only"


def test_sobel_framework_uses_product_test():
    f = MediationFit(a_hat=1, b_hat=1, d_hat=1, c_hat=2, p_a=0.001, p_b=0.001, p_d=0.9, p_c=0.9, p_ab=0.2)
    assert classify(f, 0.05, "LSE-F").papa_type == "indirect_only"
    assert classify(f, 0.05, "LSE-Sobel").papa_type == "none_established"


def test_zero_abd_has_no_subtype():
    f = MediationFit(a_hat=1, b_hat=1, d_hat=0.0, c_hat=1, p_a=0.001, p_b=0.001, p_d=0.9, p_c=0.9)
    assert classify(f, 0.05).directional_subtype == "not_applicable"


def test_classify_argument_errors():
    with pytest.raises(DomainError):
        classify(MODEL_1, 1.5)
    with pytest.raises(DomainError):
        classify(MODEL_1, 0.05, "OLS")


@given(st.floats(0.001, 0.9), st.floats(0.0, 1.0))
def test_erroneous_flag_persists_while_pvalues_stay_on_their_sides(alpha, t):
    v = classify(MODEL_2, alpha)
    if not v.erroneous_rejection:
        return
    # move alpha up but keep it at or below p_c and p_d
    upper = min(MODEL_2.p_c, MODEL_2.p_d)
    alpha2 = alpha + t * (upper - alpha)
    if alpha2 <= alpha:
        return
    assert classify(MODEL_2, alpha2).erroneous_rejection


def test_erroneous_flag_invariant_over_random_fits():
    for seed in range(300):
        x, m, y = random_columns(seed)
        f = fit_lse_columns(np.ones(len(x)), x, m, y)
        for alpha in (0.05, 0.1, 0.5):
            for fw in ("LSE-F", "LSE-Sobel"):
                v = classify(f, alpha, fw)
                assert v.erroneous_rejection == (v.papa_type != "none_established"
                                                 and v.causal_steps_type == "none_established")


def test_model_1_contributions():
    rep = percent_contributions(MODEL_1, ab=0.0165)
    assert rep.cp_ab * 100 == pytest.approx(117857, rel=0.01)
    assert rep.cp_c == 1.0
    rep2 = percent_contributions(MODEL_1)
    assert rep2.cp_ab * 100 == pytest.approx(117857, rel=0.01)


def test_model_2_direct_share():
    rep = percent_contributions(MODEL_2)
    assert abs(rep.cp_d * 100 - 71) <= 1
    assert abs(rep.cp_a) + abs(rep.cp_b) == pytest.approx(abs(rep.cp_ab), rel=1e-15)


def test_contribution_identity_for_least_squares_fits():
    for seed in range(200):
        x, m, y = random_columns(seed)
        f = fit_lse_columns(np.ones(len(x)), x, m, y)
        rep = percent_contributions(f)
        assert rep.cp_ab + rep.cp_d == pytest.approx(rep.cp_c, abs=1e-8)
        assert abs(rep.cp_c) == 1.0
        assert abs(rep.cp_a) + abs(rep.cp_b) == pytest.approx(abs(rep.cp_ab), rel=1e-12)


def test_contribution_errors():
    with pytest.raises(DegenerateFitError):
        percent_contributions(a=1, b=1, d=-1, c=0.0)
    with pytest.raises(DegenerateFitError):
        percent_contributions(a=0.0, b=0.0, d=1, c=1)
    with pytest.raises(DomainError):
        percent_contributions(a=1, b=1)
