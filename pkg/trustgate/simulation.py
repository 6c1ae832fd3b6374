"""
Parameter sweeps over the trust model, written out as CSV tables.

``sweep_thresholds`` varies the upper threshold for a few sensitive values,
``sweep_penalty`` adds the failure count on top of it, and
``sweep_lower_thresholds`` does the same as the first with the lower
threshold moving instead. Rows come out in a fixed order so identical
parameters give identical tables.
"""

import csv
import io
from dataclasses import dataclass, fields
from typing import Any, Iterable, List, Optional, Sequence, TextIO

from .ahp import ServiceCatalog
from .decision import DecisionPolicy, enforce_rank
from .logging import get_logger
from .trust import (
    HistoryRatios,
    TrustRank,
    TrustThresholds,
    adjust_thresholds,
    apply_penalty,
    decide_rank,
    penalty_coefficient,
    trust_value,
)
from .utils import format_float, frange


DEFAULT_SAMPLES = (0.1577, 0.0353, 0.0248)
DEFAULT_LOWER = 0.3
DEFAULT_UPPER = 0.7
DEFAULT_STEP = 0.01
DEFAULT_N_MAX = 5


class SweepError(ValueError):
    """Raised for sweep parameters that describe no valid grid."""
    pass


@dataclass(frozen=True)
class AssumedHistory:
    """History ratios given directly instead of counted from a log."""
    t1: Optional[float]
    t2: Optional[float]


DEFAULT_HISTORY = AssumedHistory(t1=0.4, t2=0.9)


@dataclass(frozen=True)
class SweepRange:
    """Inclusive grid start, start + step, ... up to stop."""
    start: float
    stop: float
    step: float = DEFAULT_STEP

    def values(self) -> List[float]:
        if not self.step > 0:
            raise SweepError(f"Sweep step must be positive, got {self.step}")
        if self.stop < self.start:
            raise SweepError(f"Sweep range is empty: start {self.start} > stop {self.stop}")
        return frange(self.start, self.stop, self.step)

    def upper_values(self) -> List[float]:
        """Grid for the upper threshold, which must stay in (0.5, 1]."""
        if not 0.5 < self.start or self.stop > 1.0:
            raise SweepError(f"Upper threshold range must lie in (0.5, 1], got [{self.start}, {self.stop}]")
        return self.values()

    def lower_values(self) -> List[float]:
        """Grid for the lower threshold, which must stay in [0, 0.5]."""
        if self.start < 0.0 or self.stop > 0.5:
            raise SweepError(f"Lower threshold range must lie in [0, 0.5], got [{self.start}, {self.stop}]")
        return self.values()

    @classmethod
    def default_upper(cls, step: float = DEFAULT_STEP) -> 'SweepRange':
        return cls(start=0.5 + step, stop=1.0, step=step)

    @classmethod
    def default_lower(cls, step: float = DEFAULT_STEP) -> 'SweepRange':
        return cls(start=0.0, stop=0.5, step=step)


@dataclass(frozen=True)
class ThresholdRow:
    upper: float
    s: float
    y: float
    lower_adj: float
    upper_adj: float
    rank: TrustRank


@dataclass(frozen=True)
class LowerThresholdRow:
    lower: float
    s: float
    y: float
    lower_adj: float
    upper_adj: float
    rank: TrustRank


@dataclass(frozen=True)
class PenaltyRow:
    upper: float
    s: float
    n: int
    y_effective: float
    rank: TrustRank


def _check_samples(s_values: Sequence[float]) -> List[float]:
    samples = [float(s) for s in s_values]
    if not samples:
        raise SweepError("At least one sensitive value is needed")
    return samples


def sweep_thresholds(catalog: ServiceCatalog, s_values: Sequence[float] = DEFAULT_SAMPLES,
                     lower: float = DEFAULT_LOWER, upper_range: Optional[SweepRange] = None,
                     stats: Optional[HistoryRatios] = None) -> List[ThresholdRow]:
    """Trust value and rank for every (upper threshold, sensitive value) pair."""
    samples = _check_samples(s_values)
    grid = (upper_range or SweepRange.default_upper()).upper_values()
    logger = get_logger()
    rows = []
    for upper in grid:
        thresholds = TrustThresholds(lower=lower, upper=upper)
        adjusted = adjust_thresholds(thresholds, stats)
        for s in samples:
            y = trust_value(s, thresholds, catalog).y
            rows.append(ThresholdRow(
                upper=upper, s=s, y=y,
                lower_adj=adjusted.lower_adj, upper_adj=adjusted.upper_adj,
                rank=decide_rank(y, adjusted),
            ))
        logger.debug("Simulation", f"Upper threshold {upper:.2f} swept")
    logger.info("Simulation", f"Threshold sweep: {len(rows)} rows over {len(grid)} upper thresholds")
    return rows


def sweep_lower_thresholds(catalog: ServiceCatalog, s_values: Sequence[float] = DEFAULT_SAMPLES,
                           upper: float = DEFAULT_UPPER, lower_range: Optional[SweepRange] = None,
                           stats: Optional[HistoryRatios] = None) -> List[LowerThresholdRow]:
    """Like ``sweep_thresholds`` with the upper threshold fixed and the lower one moving."""
    samples = _check_samples(s_values)
    grid = (lower_range or SweepRange.default_lower()).lower_values()
    rows = []
    for lower in grid:
        thresholds = TrustThresholds(lower=lower, upper=upper)
        adjusted = adjust_thresholds(thresholds, stats)
        for s in samples:
            y = trust_value(s, thresholds, catalog).y
            rows.append(LowerThresholdRow(
                lower=lower, s=s, y=y,
                lower_adj=adjusted.lower_adj, upper_adj=adjusted.upper_adj,
                rank=decide_rank(y, adjusted),
            ))
    get_logger().info("Simulation", f"Lower threshold sweep: {len(rows)} rows")
    return rows


def sweep_penalty(catalog: ServiceCatalog, s_values: Sequence[float] = DEFAULT_SAMPLES,
                  lower: float = DEFAULT_LOWER, upper_range: Optional[SweepRange] = None,
                  stats: Optional[HistoryRatios] = DEFAULT_HISTORY, n_max: int = DEFAULT_N_MAX,
                  policy: Optional[DecisionPolicy] = None) -> List[PenaltyRow]:
    """Penalised trust value and rank for 0..n_max failures at every grid point.

    The coefficient is recomputed for each upper threshold. Ranks go through
    the failure cap of ``policy`` but not the session lockout.
    """
    samples = _check_samples(s_values)
    grid = (upper_range or SweepRange.default_upper()).upper_values()
    policy = policy or DecisionPolicy()
    rows = []
    for upper in grid:
        thresholds = TrustThresholds(lower=lower, upper=upper)
        adjusted = adjust_thresholds(thresholds, stats)
        p = penalty_coefficient(thresholds, n_max)
        for s in samples:
            y = trust_value(s, thresholds, catalog).y
            for n in range(n_max + 1):
                y_effective = apply_penalty(y, p, n)
                rank, _ = enforce_rank(
                    decide_rank(y_effective, adjusted), n, n_max,
                    anomaly_flagged=False, policy=policy, lockout=False,
                )
                rows.append(PenaltyRow(upper=upper, s=s, n=n, y_effective=y_effective, rank=rank))
    get_logger().info("Simulation", f"Penalty sweep: {len(rows)} rows, n_max={n_max}")
    return rows


def _cell(value: Any) -> str:
    if isinstance(value, TrustRank):
        return value.value
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def write_csv(rows: Iterable[Any], stream: TextIO, row_type: Optional[type] = None) -> int:
    """Write dataclass rows with a header; floats get six fractional digits."""
    rows = list(rows)
    row_type = row_type or (type(rows[0]) if rows else None)
    if row_type is None:
        raise SweepError("Cannot infer CSV columns from an empty table")
    columns = [f.name for f in fields(row_type)]
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(getattr(row, name)) for name in columns])
    return len(rows)


def to_csv(rows: Iterable[Any], row_type: Optional[type] = None) -> str:
    buffer = io.StringIO()
    write_csv(rows, buffer, row_type)
    return buffer.getvalue()
