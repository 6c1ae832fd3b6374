"""
Tests for trust regions, trust values and the failure penalty
"""

import math
import sys
sys.path.insert(0, '.')

import pytest

from trustgate.ahp import reference_catalog
from trustgate.simulation import AssumedHistory
from trustgate.trust import (
    AdjustedThresholds,
    AuthMethod,
    PenaltyError,
    PenaltyState,
    SensitivityError,
    ThresholdError,
    TrustRank,
    TrustThresholds,
    adjust_thresholds,
    apply_penalty,
    decide_rank,
    history_adjustment_a,
    history_adjustment_b,
    normalized_sensitivity,
    penalty_coefficient,
    trust_value,
)


S_LEVEL_A = 0.30941616
S_LEVEL_E = 0.07460905
S_LEVEL_I = 0.01378256
DEFAULT = TrustThresholds(lower=0.3, upper=0.7)


def test_threshold_domain():
    assert TrustThresholds(0.0, 1.0).lower == 0.0
    assert TrustThresholds(0.5, 0.51).upper == 0.51
    for lower, upper in [(0.6, 0.7), (0.3, 0.5), (-0.1, 0.7), (0.3, 1.1), (float("nan"), 0.7)]:
        with pytest.raises(ThresholdError):
            TrustThresholds(lower, upper)


def test_recommended_thresholds():
    assert TrustThresholds.recommended() == DEFAULT


def test_calibration_factor():
    assert TrustThresholds(0.5, 0.8).calibration == pytest.approx(1.15, abs=1e-12)
    assert DEFAULT.calibration == pytest.approx(1.0, abs=1e-12)


def test_rank_methods():
    assert TrustRank.HIGH.required_method is AuthMethod.NONE
    assert TrustRank.MEDIUM.required_method is AuthMethod.PIN
    assert TrustRank.LOW.required_method is AuthMethod.BIOMETRIC
    assert TrustRank.HIGH.demote() is TrustRank.MEDIUM
    assert TrustRank.LOW.demote() is TrustRank.LOW
    assert AuthMethod.NONE.strength < AuthMethod.PIN.strength < AuthMethod.BIOMETRIC.strength


def test_history_adjustment_a():
    assert history_adjustment_a(1.0, DEFAULT) == 0.0
    assert history_adjustment_a(0.0, DEFAULT) == pytest.approx(0.4, abs=1e-12)
    a = history_adjustment_a(0.9, DEFAULT)
    assert a == pytest.approx(0.02448, abs=1e-5)
    assert DEFAULT.lower + a == pytest.approx(0.3245, abs=1e-4)

    with pytest.raises(ThresholdError):
        history_adjustment_a(1.2, DEFAULT)


def test_history_adjustment_b():
    assert history_adjustment_b(1.0, DEFAULT) == 0.0
    b = history_adjustment_b(0.4, DEFAULT)
    assert b == pytest.approx(0.06633, abs=1e-5)
    assert DEFAULT.upper + b == pytest.approx(0.7663, abs=1e-4)
    assert history_adjustment_b(0.0, DEFAULT) == pytest.approx((math.e - 1) / (math.e + 1) * 0.3, abs=1e-12)
    assert history_adjustment_b(0.0, DEFAULT) == pytest.approx(0.138635, abs=1e-6)

    with pytest.raises(ThresholdError):
        history_adjustment_b(-0.1, DEFAULT)


def test_adjust_thresholds():
    adjusted = adjust_thresholds(DEFAULT, AssumedHistory(t1=0.4, t2=0.9))
    assert adjusted.lower_adj == pytest.approx(0.324483, abs=1e-6)
    assert adjusted.upper_adj == pytest.approx(0.766331, abs=1e-6)
    assert adjusted.base == DEFAULT

    unchanged = adjust_thresholds(DEFAULT)
    assert (unchanged.lower_adj, unchanged.upper_adj) == (0.3, 0.7)

    partial = adjust_thresholds(DEFAULT, AssumedHistory(t1=None, t2=0.9))
    assert partial.b == 0.0
    assert partial.upper_adj == 0.7


def test_normalized_sensitivity():
    catalog = reference_catalog()
    assert normalized_sensitivity(S_LEVEL_A, catalog) == 1.0
    assert normalized_sensitivity(S_LEVEL_I, catalog) == 0.0
    assert normalized_sensitivity(S_LEVEL_E, catalog) == pytest.approx(0.54281, abs=1e-4)

    with pytest.raises(SensitivityError):
        normalized_sensitivity(0.5, catalog)
    with pytest.raises(SensitivityError):
        normalized_sensitivity(0.001, catalog)


def test_degenerate_catalog_rejected():
    class Flat:
        min_value = 0.5
        max_value = 0.5

    with pytest.raises(SensitivityError):
        normalized_sensitivity(0.5, Flat())


def test_trust_value():
    catalog = reference_catalog()
    evaluation = trust_value(S_LEVEL_E, DEFAULT, catalog)
    assert evaluation.y == pytest.approx(0.45718, abs=1e-4)
    assert evaluation.calibration == pytest.approx(1.0, abs=1e-12)

    assert trust_value(S_LEVEL_A, DEFAULT, catalog).y == 0.0
    assert trust_value(S_LEVEL_A, TrustThresholds(0.5, 1.0), catalog).y == 0.0
    assert trust_value(S_LEVEL_I, DEFAULT, catalog).y == 1.0


def test_trust_value_clamped():
    """Calibration above one cannot push Y past 1."""
    evaluation = trust_value(S_LEVEL_I, TrustThresholds(0.5, 1.0), reference_catalog())
    assert evaluation.y_unclamped == pytest.approx(1.25)
    assert evaluation.y == 1.0


def test_penalty_coefficient():
    p = penalty_coefficient(DEFAULT, 5)
    assert p == pytest.approx(0.844, abs=5e-4)
    assert p == pytest.approx(0.84412, abs=1e-5)
    assert 0.7 * p ** 5 == pytest.approx(0.3, abs=1e-9)

    with pytest.raises(PenaltyError):
        penalty_coefficient(TrustThresholds(0.0, 0.7), 5)
    with pytest.raises(PenaltyError):
        penalty_coefficient(DEFAULT, 0)


def test_apply_penalty():
    assert apply_penalty(0.45718, 0.844, 0) == 0.45718
    assert apply_penalty(0.45718, 0.844, 1) == pytest.approx(0.38586, abs=1e-4)
    assert apply_penalty(0.45718, 0.844, 2) == pytest.approx(0.3257, abs=1e-3)
    assert apply_penalty(0.45718, 0.844, 3) == pytest.approx(0.2749, abs=1e-3)

    with pytest.raises(PenaltyError):
        apply_penalty(1.5, 0.844, 1)
    with pytest.raises(PenaltyError):
        apply_penalty(0.5, 0.0, 1)
    with pytest.raises(PenaltyError):
        apply_penalty(0.5, 0.844, -1)


def test_penalty_state():
    state = PenaltyState.for_thresholds(DEFAULT, 5)
    assert state.n_failures == 0
    assert state.apply(0.7) == 0.7
    for _ in range(5):
        state = state.record_failure()
    assert state.exhausted
    assert state.apply(0.7) == pytest.approx(0.3, abs=1e-9)
    assert state.reset().n_failures == 0


def test_decide_rank():
    regions = AdjustedThresholds(lower_adj=0.3245, upper_adj=0.7663, a=0.0245, b=0.0663, base=DEFAULT)
    assert decide_rank(0.45718, regions) is TrustRank.MEDIUM
    assert decide_rank(0.0, regions) is TrustRank.LOW
    assert decide_rank(0.2749, regions) is TrustRank.LOW
    assert decide_rank(1.0, regions) is TrustRank.HIGH
    # a value on a threshold belongs to the higher region
    assert decide_rank(0.3245, regions) is TrustRank.MEDIUM
    assert decide_rank(0.7663, regions) is TrustRank.HIGH

    with pytest.raises(ThresholdError):
        decide_rank(1.2, regions)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
