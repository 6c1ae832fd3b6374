"""
Trust regions, trust values and the failure penalty.

Three ranks split the trust scale [0, 1] at a lower threshold w and an
upper threshold W. The authentication history shifts both thresholds up,
the service sensitivity sets the trust value, and every failed attempt
multiplies the trust value by a penalty coefficient sized so that n_max
failures take a value at W down to w.

Everything here is a pure function of its arguments.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Protocol


E = math.e
# Slack for sensitive values printed with fewer digits than the catalog holds
SENSITIVITY_TOLERANCE = 1e-7


class ThresholdError(ValueError):
    """Raised for thresholds or history ratios outside their domain."""
    pass


class SensitivityError(ValueError):
    """Raised when a sensitive value cannot be placed on the catalog scale."""
    pass


class PenaltyError(ValueError):
    """Raised when a penalty coefficient cannot be derived or applied."""
    pass


class AuthMethod(Enum):
    """Credential a user must present."""
    NONE = "None"
    PIN = "PIN"
    BIOMETRIC = "Biometric"

    @property
    def strength(self) -> int:
        return _METHOD_STRENGTH[self]


class TrustRank(Enum):
    """Trust region a request falls in, with its fixed credential."""
    LOW = "Low"
    MEDIUM = "Medium"
    HIGH = "High"

    @property
    def required_method(self) -> AuthMethod:
        return _RANK_METHOD[self]

    @property
    def level(self) -> int:
        return _RANK_LEVEL[self]

    def demote(self) -> 'TrustRank':
        """One step down; Low stays Low."""
        if self is TrustRank.HIGH:
            return TrustRank.MEDIUM
        return TrustRank.LOW



_RANK_METHOD = {
    TrustRank.HIGH: AuthMethod.NONE,
    TrustRank.MEDIUM: AuthMethod.PIN,
    TrustRank.LOW: AuthMethod.BIOMETRIC,
}
_RANK_LEVEL = {TrustRank.LOW: 0, TrustRank.MEDIUM: 1, TrustRank.HIGH: 2}
_METHOD_STRENGTH = {AuthMethod.NONE: 0, AuthMethod.PIN: 1, AuthMethod.BIOMETRIC: 2}


class HistoryRatios(Protocol):
    """Anything carrying the high-rank ratio t1 and the PIN success ratio t2."""
    t1: Optional[float]
    t2: Optional[float]


class SensitivityScale(Protocol):
    """Anything exposing the smallest and largest sensitive value."""
    @property
    def min_value(self) -> float: ...

    @property
    def max_value(self) -> float: ...


@dataclass(frozen=True)
class TrustThresholds:
    """Customer thresholds; must satisfy 0 <= lower <= 0.5 < upper <= 1."""
    lower: float
    upper: float

    def __post_init__(self):
        lower, upper = float(self.lower), float(self.upper)
        if math.isnan(lower) or math.isnan(upper):
            raise ThresholdError("Thresholds must be numbers")
        if not (0.0 <= lower <= 0.5 < upper <= 1.0):
            raise ThresholdError(
                f"Thresholds must satisfy 0 <= lower <= 0.5 < upper <= 1, got lower={lower}, upper={upper}"
            )
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def recommended(cls) -> 'TrustThresholds':
        """Operator default offered to a new customer."""
        return cls(lower=0.3, upper=0.7)

    @property
    def calibration(self) -> float:
        """(W + w + 1) / 2, offsetting thresholds set too high or too low."""
        return (self.upper + self.lower + 1.0) / 2.0

    def to_dict(self) -> Dict[str, float]:
        return {"lower": self.lower, "upper": self.upper}


@dataclass(frozen=True)
class AdjustedThresholds:
    """Thresholds after the history shifts: lower + a, upper + b."""
    lower_adj: float
    upper_adj: float
    a: float
    b: float
    base: TrustThresholds

    def to_dict(self) -> Dict[str, float]:
        return {
            "lower": self.base.lower,
            "upper": self.base.upper,
            "lower_adj": self.lower_adj,
            "upper_adj": self.upper_adj,
            "a": self.a,
            "b": self.b,
        }


@dataclass(frozen=True)
class TrustEvaluation:
    """Every intermediate of one trust value computation."""
    s: float
    s_prime: float
    y_star: float
    calibration: float
    y_unclamped: float
    y: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "s": self.s,
            "s_prime": self.s_prime,
            "y_star": self.y_star,
            "calibration": self.calibration,
            "y_unclamped": self.y_unclamped,
            "y": self.y,
        }


@dataclass(frozen=True)
class PenaltyState:
    """Penalty coefficient together with the failures counted so far."""
    p: float
    n_failures: int
    n_max: int

    @classmethod
    def for_thresholds(cls, thresholds: TrustThresholds, n_max: int,
                       n_failures: int = 0) -> 'PenaltyState':
        return cls(p=penalty_coefficient(thresholds, n_max), n_failures=n_failures, n_max=n_max)

    @property
    def exhausted(self) -> bool:
        return self.n_failures >= self.n_max

    def record_failure(self) -> 'PenaltyState':
        return PenaltyState(p=self.p, n_failures=self.n_failures + 1, n_max=self.n_max)

    def reset(self) -> 'PenaltyState':
        return PenaltyState(p=self.p, n_failures=0, n_max=self.n_max)

    def apply(self, y: float) -> float:
        return apply_penalty(y, self.p, self.n_failures)

    def to_dict(self) -> Dict[str, Any]:
        return {"p": self.p, "n_failures": self.n_failures, "n_max": self.n_max}


def _check_ratio(name: str, value: float) -> float:
    value = float(value)
    if math.isnan(value) or not 0.0 <= value <= 1.0:
        raise ThresholdError(f"{name} must lie in [0, 1], got {value}")
    return value


def history_adjustment_a(t2: float, thresholds: TrustThresholds) -> float:
    """Lower-threshold shift from the PIN success ratio; 0 at t2 = 1, W - w at t2 = 0."""
    t2 = _check_ratio("T2", t2)
    return (math.exp(1.0 - t2) - 1.0) / (E - 1.0) * (thresholds.upper - thresholds.lower)


def history_adjustment_b(t1: float, thresholds: TrustThresholds) -> float:
    """Upper-threshold shift from the high-rank ratio, kept flatter than ``a``."""
    t1 = _check_ratio("T1", t1)
    return (math.exp(1.0 - t1) - 1.0) / (E + 1.0) * (1.0 - thresholds.upper)


def adjust_thresholds(thresholds: TrustThresholds,
                      stats: Optional[HistoryRatios] = None) -> AdjustedThresholds:
    """Shift the thresholds by the user's history.

    No history, or a ratio without events behind it, leaves the
    corresponding threshold where the customer put it.
    """
    a = 0.0
    b = 0.0
    if stats is not None:
        if stats.t2 is not None:
            a = history_adjustment_a(stats.t2, thresholds)
        if stats.t1 is not None:
            b = history_adjustment_b(stats.t1, thresholds)
    return AdjustedThresholds(
        lower_adj=thresholds.lower + a,
        upper_adj=thresholds.upper + b,
        a=a,
        b=b,
        base=thresholds,
    )


def normalized_sensitivity(s: float, catalog: SensitivityScale) -> float:
    """Position of ``s`` between the least and most sensitive service on a log scale."""
    s = float(s)
    s_min, s_max = catalog.min_value, catalog.max_value
    if not s_max > s_min:
        raise SensitivityError(
            f"Catalog needs at least two distinct sensitive values, got min={s_min}, max={s_max}"
        )
    if math.isnan(s) or s < s_min - SENSITIVITY_TOLERANCE or s > s_max + SENSITIVITY_TOLERANCE:
        raise SensitivityError(f"Sensitive value {s} outside catalog range [{s_min}, {s_max}]")
    s = min(max(s, s_min), s_max)
    # the ratio does not depend on the logarithm base
    s_prime = (math.log10(s) - math.log10(s_min)) / (math.log10(s_max) - math.log10(s_min))
    return min(max(s_prime, 0.0), 1.0)


def trust_value(s: float, thresholds: TrustThresholds, catalog: SensitivityScale) -> TrustEvaluation:
    """Inverse normalised sensitivity scaled by the calibration factor, clamped to [0, 1]."""
    s_prime = normalized_sensitivity(s, catalog)
    y_star = 1.0 - s_prime
    calibration = thresholds.calibration
    y_unclamped = y_star * calibration
    return TrustEvaluation(
        s=float(s),
        s_prime=s_prime,
        y_star=y_star,
        calibration=calibration,
        y_unclamped=y_unclamped,
        y=min(max(y_unclamped, 0.0), 1.0),
    )


def penalty_coefficient(thresholds: TrustThresholds, n_max: int) -> float:
    """P such that upper * P**n_max == lower."""
    if isinstance(n_max, bool) or not isinstance(n_max, int) or n_max < 1:
        raise PenaltyError(f"Allowed trials must be a positive integer, got {n_max!r}")
    if thresholds.lower <= 0.0:
        raise PenaltyError(
            "Lower threshold 0 gives a penalty coefficient of 0: a single failure would "
            "drop any trust value to 0. Choose a lower threshold above 0."
        )
    return (thresholds.lower / thresholds.upper) ** (1.0 / n_max)


def apply_penalty(y: float, p: float, n: int) -> float:
    """Trust value after ``n`` failures: y * p**n."""
    if math.isnan(y) or not 0.0 <= y <= 1.0:
        raise PenaltyError(f"Trust value must lie in [0, 1], got {y}")
    if math.isnan(p) or not 0.0 < p <= 1.0:
        raise PenaltyError(f"Penalty coefficient must lie in (0, 1], got {p}")
    if isinstance(n, bool) or not isinstance(n, int) or n < 0:
        raise PenaltyError(f"Failure count must be a non-negative integer, got {n!r}")
    return y * p ** n


def decide_rank(y_effective: float, adjusted: AdjustedThresholds) -> TrustRank:
    """Map a trust value to its region; a value on a threshold belongs to the higher region."""
    if math.isnan(y_effective) or not 0.0 <= y_effective <= 1.0:
        raise ThresholdError(f"Trust value must lie in [0, 1], got {y_effective}")
    if y_effective < adjusted.lower_adj:
        return TrustRank.LOW
    if y_effective < adjusted.upper_adj:
        return TrustRank.MEDIUM
    return TrustRank.HIGH
