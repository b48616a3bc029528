import numpy as np
import pytest

from tiebreak.designs import SlidingScale, TieBreaker
from tiebreak.errors import DomainError
from tiebreak.moments import DesignMoments, sliding_moments
from tiebreak.sliding import (equivalent_tiebreaker, full_covariance_sliding,
                              moment_determinant, symmetrize,
                              variances_sliding)
from tiebreak.twoline import MomentSchur, covariance_uniform

from helpers import balanced_monotone_scale

ABS_SCALE = SlidingScale.from_callable(abs, breakpoints=(0.0,))


def test_determinant_matches_schur():
    rng = np.random.default_rng(21)
    for _ in range(10):
        mom = sliding_moments(balanced_monotone_scale(rng))
        schur = MomentSchur.from_moments(mom)
        assert moment_determinant(mom) == pytest.approx(schur.det, abs=1e-10)


def test_determinant_of_window_scales():
    for d in (0.0, 0.5, 1.0):
        mom = sliding_moments(SlidingScale.from_rule(TieBreaker(d)))
        u = (1 - d * d) / 2
        assert moment_determinant(mom) == pytest.approx(
            (1 - 3 * u * u) * (1.0 / 3.0 - u * u), abs=1e-9)


def test_variances_match_full_covariance():
    rng = np.random.default_rng(33)
    for _ in range(8):
        scale = balanced_monotone_scale(rng)
        mom = sliding_moments(scale)
        var = variances_sliding(mom)
        full = full_covariance_sliding(mom)
        assert full.var("beta0") == pytest.approx(var.var_level, rel=1e-6)
        assert full.var("beta2") == pytest.approx(var.var_level, rel=1e-6)
        assert full.var("beta1") == pytest.approx(var.var_slope, rel=1e-6)
        assert full.var("beta3") == pytest.approx(var.var_slope, rel=1e-6)


def test_unbalanced_scale_rejected():
    lopsided = DesignMoments(0.3, 0.2, 0.0)
    with pytest.raises(DomainError):
        variances_sliding(lopsided)
    with pytest.raises(DomainError):
        moment_determinant(lopsided)
    # but the full covariance handles imbalance exactly
    full = full_covariance_sliding(lopsided)
    assert full.var("beta2") > 0


def test_absolute_value_scale_frozen():
    mom = sliding_moments(ABS_SCALE)
    assert mom.zx_mean == pytest.approx(0.0, abs=1e-9)
    assert mom.zx2_mean == pytest.approx(1.0 / 6.0, abs=1e-9)
    assert moment_determinant(mom) == pytest.approx(0.25, abs=1e-9)
    var = variances_sliding(mom)
    assert var.var_level == pytest.approx(1.0, abs=1e-8)
    assert var.var_slope == pytest.approx(4.0, abs=1e-8)
    full = full_covariance_sliding(mom)
    assert full.cov("beta1", "beta3") == pytest.approx(-2.0, abs=1e-8)
    # with E[z] = E[zx] = 0 the level coefficients decouple entirely
    assert full.cov("beta0", "beta2") == pytest.approx(0.0, abs=1e-8)
    assert full.cov("beta0", "beta3") == pytest.approx(0.0, abs=1e-8)


def test_absolute_value_counterexample():
    """Symmetrizing helps the slopes but can hurt their sum.

    The even moment of |x| couples b1 and b3 with a negative sign, which
    happens to cancel inside Var(b1 + b3); removing it raises that
    variance from 4 to 6 even as both individual variances stay put.
    """
    w = np.array([0.0, 1.0, 0.0, 1.0])
    before = full_covariance_sliding(sliding_moments(ABS_SCALE))
    after = full_covariance_sliding(sliding_moments(symmetrize(ABS_SCALE)))
    assert before.quadratic_form(w) == pytest.approx(4.0, abs=1e-8)
    assert after.quadratic_form(w) == pytest.approx(6.0, abs=1e-8)
    assert after.quadratic_form(w) > before.quadratic_form(w) + 1.0


def test_symmetrize_balances_and_helps():
    rng = np.random.default_rng(7)
    for _ in range(20):
        scale = balanced_monotone_scale(rng)
        sym = symmetrize(scale)
        mom = sliding_moments(scale)
        mom_sym = sliding_moments(sym)
        assert abs(mom_sym.z_mean) <= 1e-9
        assert abs(mom_sym.zx2_mean) <= 1e-9
        assert mom_sym.zx_mean == pytest.approx(mom.zx_mean, abs=1e-9)
        assert moment_determinant(mom_sym) >= moment_determinant(mom) - 1e-10
        assert variances_sliding(mom_sym).var_slope \
            <= variances_sliding(mom).var_slope + 1e-8


def test_equivalent_tiebreaker_roundtrip():
    for d in (0.0, 0.3, 0.6, 1.0):
        scale = SlidingScale.from_rule(TieBreaker(d))
        assert equivalent_tiebreaker(sliding_moments(scale)) == pytest.approx(
            d, abs=1e-7)


def test_equivalent_tiebreaker_matches_slope_variance():
    # A symmetrized scale has the same slope precision as its width-
    # equivalent window rule.
    rng = np.random.default_rng(50)
    for _ in range(5):
        sym = symmetrize(balanced_monotone_scale(rng))
        mom = sliding_moments(sym)
        d = equivalent_tiebreaker(mom)
        assert variances_sliding(mom).var_slope == pytest.approx(
            covariance_uniform(d).var("beta3"), rel=1e-6)


def test_equivalent_tiebreaker_rejects_reversed_scales():
    reversed_scale = SlidingScale.from_table([-1.0, 1.0], [1.0, 0.0])
    with pytest.raises(DomainError):
        equivalent_tiebreaker(sliding_moments(reversed_scale))


def test_symmetrize_type_check():
    with pytest.raises(DomainError):
        symmetrize(TieBreaker(0.5))
