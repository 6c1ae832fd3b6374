"""
Authentication history: an append-only event log and the statistics the
trust engine reads from it.

T1 is the share of a user's attempts that were granted the high rank, T2 the
PIN success ratio and T3 the biometric success ratio. T3 is kept for
reporting only; threshold adjustment reads T1 and T2.
"""

import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .logging import get_logger
from .trust import AuthMethod, TrustRank


EVENT_FIELDS = ("ts", "user", "level", "rank", "method", "outcome")


class EventError(ValueError):
    """Raised for events that break their invariants or cannot be parsed."""
    pass


class AuthOutcome(Enum):
    SUCCESS = "Success"
    FAILURE = "Failure"


def _parse_enum(enum_cls, value: Any, field_name: str):
    if isinstance(value, enum_cls):
        return value
    for member in enum_cls:
        if str(value).strip().lower() in (member.value.lower(), member.name.lower()):
            return member
    raise EventError(f"Invalid {field_name}: {value!r}")


def parse_timestamp(value: Union[str, datetime]) -> datetime:
    """ISO-8601 text or datetime to an aware UTC datetime; naive values are taken as UTC."""
    if isinstance(value, datetime):
        ts = value
    else:
        try:
            ts = datetime.fromisoformat(str(value).strip().replace("Z", "+00:00"))
        except ValueError as e:
            raise EventError(f"Invalid timestamp: {value!r}") from e
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


@dataclass(frozen=True)
class AuthEvent:
    """One authentication attempt as reported by the service provider."""
    timestamp: datetime
    user_id: str
    service_level: str
    rank_at_attempt: TrustRank
    method: AuthMethod
    outcome: AuthOutcome
    extra: Dict[str, Any] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "timestamp", parse_timestamp(self.timestamp))
        object.__setattr__(self, "rank_at_attempt", _parse_enum(TrustRank, self.rank_at_attempt, "rank"))
        object.__setattr__(self, "method", _parse_enum(AuthMethod, self.method, "method"))
        object.__setattr__(self, "outcome", _parse_enum(AuthOutcome, self.outcome, "outcome"))

    @classmethod
    def now(cls, user_id: str, service_level: str, rank: TrustRank,
            outcome: AuthOutcome, method: Optional[AuthMethod] = None) -> 'AuthEvent':
        """Event stamped with the current time; method defaults to the rank's credential."""
        return cls(
            timestamp=datetime.now(timezone.utc),
            user_id=user_id,
            service_level=service_level,
            rank_at_attempt=rank,
            method=method or rank.required_method,
            outcome=outcome,
        )

    def validate(self) -> None:
        if not self.user_id:
            raise EventError("Event needs a user id")
        if not self.service_level:
            raise EventError("Event needs a service level")
        if self.method is not self.rank_at_attempt.required_method:
            raise EventError(
                f"Method {self.method.value} does not match rank {self.rank_at_attempt.value} "
                f"(expected {self.rank_at_attempt.required_method.value})"
            )
        if self.rank_at_attempt is TrustRank.HIGH and self.outcome is not AuthOutcome.SUCCESS:
            raise EventError("High-rank access needs no credential and cannot fail")

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "ts": format_timestamp(self.timestamp),
            "user": self.user_id,
            "level": self.service_level,
            "rank": self.rank_at_attempt.value,
            "method": self.method.value,
            "outcome": self.outcome.value,
        }
        for key, value in self.extra.items():
            if key not in data:
                data[key] = value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'AuthEvent':
        missing = [name for name in EVENT_FIELDS if name not in data]
        if missing:
            raise EventError(f"Event is missing fields: {', '.join(missing)}")
        return cls(
            timestamp=data["ts"],
            user_id=str(data["user"]),
            service_level=str(data["level"]),
            rank_at_attempt=data["rank"],
            method=data["method"],
            outcome=data["outcome"],
            extra={k: v for k, v in data.items() if k not in EVENT_FIELDS},
        )


@dataclass(frozen=True)
class AuthHistoryStats:
    """History ratios; a ratio is None when nothing stands behind it."""
    t1: Optional[float]
    t2: Optional[float]
    t3: Optional[float]
    total_events: int
    pin_attempts: int
    high_events: int = 0
    pin_successes: int = 0
    biometric_attempts: int = 0
    biometric_successes: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t1": self.t1,
            "t2": self.t2,
            "t3": self.t3,
            "total_events": self.total_events,
            "high_events": self.high_events,
            "pin_attempts": self.pin_attempts,
            "pin_successes": self.pin_successes,
            "biometric_attempts": self.biometric_attempts,
            "biometric_successes": self.biometric_successes,
        }


@dataclass(frozen=True)
class AnomalyRule:
    """Thresholds of the good-record-turned-bad signal on PIN outcomes."""
    recent_window: int = 10
    min_events: int = 5
    good_record: float = 0.8
    delta: float = 0.3


@dataclass(frozen=True)
class AnomalyReport:
    flagged: bool
    explanation: str
    older_t2: Optional[float] = None
    recent_t2: Optional[float] = None
    older_events: int = 0
    recent_events: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "flagged": self.flagged,
            "explanation": self.explanation,
            "older_t2": self.older_t2,
            "recent_t2": self.recent_t2,
            "older_events": self.older_events,
            "recent_events": self.recent_events,
        }


class HistoryLog:
    """Append-only, single-writer event log.

    Appends are serialised by a lock; readers take ``snapshot()`` and work on
    an immutable prefix. With a ``path`` every append is also written as one
    JSON line, and existing lines are replayed on open.
    """

    def __init__(self, path: Optional[Union[str, Path]] = None,
                 events: Iterable[AuthEvent] = ()):
        self.path = Path(path) if path is not None else None
        self._events: List[AuthEvent] = []
        self._lock = threading.Lock()
        self.logger = get_logger()

        if self.path is not None and self.path.exists():
            self._events.extend(read_events(self.path))
        for event in events:
            self.record(event)

    @classmethod
    def open(cls, path: Union[str, Path]) -> 'HistoryLog':
        return cls(path=path)

    def record(self, event: AuthEvent) -> 'HistoryLog':
        event.validate()
        with self._lock:
            if self.path is not None:
                if not self.path.parent.exists():
                    self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, 'a', encoding='utf-8') as f:
                    f.write(json.dumps(event.to_dict()) + '\n')
            self._events.append(event)
        self.logger.debug(
            "HistoryStore",
            f"Recorded {event.rank_at_attempt.value}/{event.outcome.value} for {event.user_id}",
        )
        return self

    def snapshot(self) -> Tuple[AuthEvent, ...]:
        with self._lock:
            return tuple(self._events)

    def events_for(self, user_id: str) -> List[AuthEvent]:
        return [e for e in self.snapshot() if e.user_id == user_id]

    def __len__(self) -> int:
        with self._lock:
            return len(self._events)


def read_events(path: Union[str, Path]) -> List[AuthEvent]:
    """Parse a JSONL history file, validating every line."""
    events = []
    with open(path, 'r', encoding='utf-8') as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as e:
                raise EventError(f"{path}:{line_no}: invalid JSON: {e}") from e
            if not isinstance(data, dict):
                raise EventError(f"{path}:{line_no}: expected a JSON object")
            try:
                event = AuthEvent.from_dict(data)
                event.validate()
            except EventError as e:
                raise EventError(f"{path}:{line_no}: {e}") from e
            events.append(event)
    return events


def write_events(path: Union[str, Path], events: Sequence[AuthEvent]) -> None:
    """Write events as a fresh JSONL file."""
    with open(path, 'w', encoding='utf-8') as f:
        for event in events:
            f.write(json.dumps(event.to_dict()) + '\n')


def record_event(log: HistoryLog, event: AuthEvent) -> HistoryLog:
    """Append an event after checking its invariants."""
    return log.record(event)


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    return numerator / denominator if denominator else None


def stats_from_events(events: Sequence[AuthEvent]) -> Optional[AuthHistoryStats]:
    if not events:
        return None
    high = sum(1 for e in events if e.rank_at_attempt is TrustRank.HIGH)
    pin = [e for e in events if e.method is AuthMethod.PIN]
    bio = [e for e in events if e.method is AuthMethod.BIOMETRIC]
    pin_ok = sum(1 for e in pin if e.outcome is AuthOutcome.SUCCESS)
    bio_ok = sum(1 for e in bio if e.outcome is AuthOutcome.SUCCESS)
    return AuthHistoryStats(
        t1=_ratio(high, len(events)),
        t2=_ratio(pin_ok, len(pin)),
        t3=_ratio(bio_ok, len(bio)),
        total_events=len(events),
        pin_attempts=len(pin),
        high_events=high,
        pin_successes=pin_ok,
        biometric_attempts=len(bio),
        biometric_successes=bio_ok,
    )


def compute_stats(log: HistoryLog, user_id: str,
                  window: Optional[int] = None) -> Optional[AuthHistoryStats]:
    """History ratios over the user's events, or the last ``window`` of them.

    Returns None when the user has no events.
    """
    if window is not None and window < 1:
        raise ValueError(f"Window must be a positive count, got {window}")
    events = log.events_for(user_id)
    if window is not None:
        events = events[-window:]
    return stats_from_events(events)


def _pin_success_ratio(events: Sequence[AuthEvent]) -> Optional[float]:
    return _ratio(sum(1 for e in events if e.outcome is AuthOutcome.SUCCESS), len(events))


def detect_anomaly(log: HistoryLog, user_id: str,
                   rule: Optional[AnomalyRule] = None) -> AnomalyReport:
    """Flag a user whose PIN record was good and has recently turned bad.

    The most recent ``recent_window`` PIN attempts are compared with all
    earlier ones.
    """
    rule = rule or AnomalyRule()
    pin_events = [e for e in log.events_for(user_id) if e.method is AuthMethod.PIN]
    recent = pin_events[-rule.recent_window:] if rule.recent_window > 0 else []
    older = pin_events[:len(pin_events) - len(recent)]

    if len(older) < rule.min_events or len(recent) < rule.min_events:
        return AnomalyReport(
            flagged=False,
            explanation=(
                f"Not enough PIN history: {len(older)} older and {len(recent)} recent attempts "
                f"(need {rule.min_events} in each)"
            ),
            older_events=len(older),
            recent_events=len(recent),
        )

    older_t2 = _pin_success_ratio(older)
    recent_t2 = _pin_success_ratio(recent)
    drop = older_t2 - recent_t2
    flagged = older_t2 >= rule.good_record and drop > rule.delta
    if flagged:
        explanation = (
            f"PIN success fell from {older_t2:.2f} over {len(older)} attempts to "
            f"{recent_t2:.2f} over the last {len(recent)}; identity may be compromised"
        )
        get_logger().warning("HistoryStore", f"Anomaly for {user_id}: {explanation}")
    elif older_t2 < rule.good_record:
        explanation = f"Earlier PIN success {older_t2:.2f} is below the good-record mark {rule.good_record:.2f}"
    else:
        explanation = f"PIN success moved from {older_t2:.2f} to {recent_t2:.2f}, within {rule.delta:.2f}"
    return AnomalyReport(
        flagged=flagged,
        explanation=explanation,
        older_t2=older_t2,
        recent_t2=recent_t2,
        older_events=len(older),
        recent_events=len(recent),
    )
