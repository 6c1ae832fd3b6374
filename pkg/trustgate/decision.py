"""
Access decisions: from a service level and a user's history to the
credential that user must present, plus failure sessions around it.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from .ahp import CatalogEntry, ServiceCatalog
from .history import (
    AnomalyReport,
    AnomalyRule,
    AuthEvent,
    AuthHistoryStats,
    AuthOutcome,
    HistoryLog,
    compute_stats,
    detect_anomaly,
)
from .logging import get_logger
from .trust import (
    AdjustedThresholds,
    AuthMethod,
    PenaltyError,
    PenaltyState,
    TrustEvaluation,
    TrustRank,
    TrustThresholds,
    adjust_thresholds,
    decide_rank,
    trust_value,
)


class UnknownServiceError(ValueError):
    """Raised when a request names a level the catalog does not have."""
    pass


class SessionClosedError(RuntimeError):
    """Raised when an attempt is reported on a session that is already over."""
    pass


class AnomalyMode(Enum):
    """What a flagged history does to the decided rank."""
    OFF = "off"
    DEMOTE = "demote"
    FORCE_LOW = "force_low"


@dataclass(frozen=True)
class DecisionPolicy:
    """Enforcement applied on top of the trust region."""
    anomaly_mode: AnomalyMode = AnomalyMode.DEMOTE
    anomaly_rule: AnomalyRule = field(default_factory=AnomalyRule)
    cap_after_failure: bool = True
    single_lockout_event: bool = True
    history_window: Optional[int] = None

    @classmethod
    def from_config(cls, config) -> 'DecisionPolicy':
        return cls(
            anomaly_mode=AnomalyMode(config.anomaly.mode),
            anomaly_rule=config.anomaly.rule(),
            cap_after_failure=config.penalty.cap_after_failure,
            single_lockout_event=config.penalty.single_lockout_event,
            history_window=config.history_window,
        )


@dataclass(frozen=True)
class AccessRequest:
    user_id: str
    service_level: str
    thresholds: TrustThresholds = field(default_factory=TrustThresholds.recommended)
    n_max: int = 5

    def __post_init__(self):
        if isinstance(self.n_max, bool) or not isinstance(self.n_max, int) or self.n_max < 1:
            raise PenaltyError(f"Allowed trials must be a positive integer, got {self.n_max!r}")


@dataclass(frozen=True)
class AuthDecision:
    """Outcome of one evaluation.

    ``region_rank`` is the trust region of ``y_effective``; ``rank`` is what
    is enforced after anomaly handling, the failure cap and lockout.
    """
    request: AccessRequest
    service: CatalogEntry
    evaluation: TrustEvaluation
    y_effective: float
    adjusted: AdjustedThresholds
    penalty: Optional[PenaltyState]
    region_rank: TrustRank
    rank: TrustRank
    anomaly: AnomalyReport
    stats: Optional[AuthHistoryStats] = None
    reasons: Tuple[str, ...] = ()

    @property
    def y(self) -> float:
        return self.evaluation.y

    @property
    def required_method(self) -> AuthMethod:
        return self.rank.required_method

    @property
    def n_failures(self) -> int:
        return self.penalty.n_failures if self.penalty is not None else 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "user": self.request.user_id,
            "level": self.service.level,
            "service": self.service.name,
            "sensitive_value": self.service.sensitive_value,
            "y": self.y,
            "y_effective": self.y_effective,
            "evaluation": self.evaluation.to_dict(),
            "thresholds": self.adjusted.to_dict(),
            "penalty": self.penalty.to_dict() if self.penalty is not None else None,
            "region_rank": self.region_rank.value,
            "rank": self.rank.value,
            "required_method": self.required_method.value,
            "anomaly": self.anomaly.to_dict(),
            "stats": self.stats.to_dict() if self.stats is not None else None,
            "reasons": list(self.reasons),
        }


def enforce_rank(region_rank: TrustRank, n_failures: int, n_max: int,
                 anomaly_flagged: bool, policy: DecisionPolicy,
                 lockout: bool = True) -> Tuple[TrustRank, Tuple[str, ...]]:
    """Apply the enforcement policy to a trust region. Never promotes."""
    rank = region_rank
    reasons: List[str] = []

    if anomaly_flagged:
        if policy.anomaly_mode is AnomalyMode.DEMOTE:
            rank = rank.demote()
            reasons.append("history anomaly: rank demoted one step")
        elif policy.anomaly_mode is AnomalyMode.FORCE_LOW:
            rank = TrustRank.LOW
            reasons.append("history anomaly: rank forced to Low")

    if policy.cap_after_failure and n_failures > 0 and rank is TrustRank.HIGH:
        rank = TrustRank.MEDIUM
        reasons.append("failed attempt: no-key access withdrawn")

    if lockout and n_failures >= n_max and rank is not TrustRank.LOW:
        rank = TrustRank.LOW
        reasons.append(f"{n_failures} failures reached the limit of {n_max}: biometric only")

    return rank, tuple(reasons)


def _lookup(catalog: ServiceCatalog, level: str) -> CatalogEntry:
    entry = catalog.get(level)
    if entry is None:
        raise UnknownServiceError(
            f"Unknown service level {level!r}; catalog has {', '.join(e.level for e in catalog)}"
        )
    return entry


def decide(request: AccessRequest, catalog: ServiceCatalog,
           stats: Optional[AuthHistoryStats], anomaly: AnomalyReport,
           failures: int = 0, policy: Optional[DecisionPolicy] = None) -> AuthDecision:
    """Evaluate a request against a fixed history snapshot."""
    policy = policy or DecisionPolicy()
    if isinstance(failures, bool) or not isinstance(failures, int) or failures < 0:
        raise PenaltyError(f"Failure count must be a non-negative integer, got {failures!r}")

    entry = _lookup(catalog, request.service_level)
    thresholds = request.thresholds
    adjusted = adjust_thresholds(thresholds, stats)
    evaluation = trust_value(entry.sensitive_value, thresholds, catalog)

    if thresholds.lower > 0.0:
        penalty: Optional[PenaltyState] = PenaltyState.for_thresholds(
            thresholds, request.n_max, failures
        )
        y_effective = penalty.apply(evaluation.y)
    elif failures == 0:
        penalty = None
        y_effective = evaluation.y
    else:
        raise PenaltyError("Lower threshold 0 leaves no penalty coefficient to apply to failures")

    region_rank = decide_rank(y_effective, adjusted)
    rank, reasons = enforce_rank(
        region_rank, failures, request.n_max, anomaly.flagged, policy
    )
    return AuthDecision(
        request=request,
        service=entry,
        evaluation=evaluation,
        y_effective=y_effective,
        adjusted=adjusted,
        penalty=penalty,
        region_rank=region_rank,
        rank=rank,
        anomaly=anomaly,
        stats=stats,
        reasons=reasons,
    )


def evaluate_access(request: AccessRequest, catalog: ServiceCatalog, log: HistoryLog,
                    failures: int = 0, policy: Optional[DecisionPolicy] = None) -> AuthDecision:
    """Decide the credential for one request from the catalog and the user's history."""
    policy = policy or DecisionPolicy()
    logger = get_logger()
    logger.push_correlation_id(request.user_id)
    try:
        stats = compute_stats(log, request.user_id, window=policy.history_window)
        anomaly = detect_anomaly(log, request.user_id, policy.anomaly_rule)
        decision = decide(request, catalog, stats, anomaly, failures, policy)
        logger.info(
            "DecisionEngine",
            f"Level {decision.service.level}: Y={decision.y:.6f} Y'={decision.y_effective:.6f} "
            f"-> {decision.rank.value} ({decision.required_method.value})",
            decision.to_dict(),
        )
        return decision
    finally:
        logger.pop_correlation_id()


class SessionState(Enum):
    OPEN = "open"
    SUCCEEDED = "succeeded"
    LOCKED = "locked"


@dataclass
class AuthSession:
    """Attempts of one user on one request.

    Stats and the anomaly report are taken once when the session opens, so
    the only thing that moves within a session is the penalty state.
    ``failed_rank`` is the rank of the first failed attempt; the single
    closing Failure event is written with it.
    """
    request: AccessRequest
    catalog: ServiceCatalog
    log: HistoryLog
    policy: DecisionPolicy
    stats: Optional[AuthHistoryStats]
    anomaly: AnomalyReport
    decisions: List[AuthDecision] = field(default_factory=list)
    penalty: Optional[PenaltyState] = None
    failed_rank: Optional[TrustRank] = None
    state: SessionState = SessionState.OPEN

    @property
    def n_failures(self) -> int:
        return self.penalty.n_failures if self.penalty is not None else 0

    @property
    def terminal(self) -> bool:
        return self.state is not SessionState.OPEN

    @property
    def current(self) -> AuthDecision:
        return self.decisions[-1]

    def _decide(self) -> AuthDecision:
        return decide(self.request, self.catalog, self.stats, self.anomaly,
                      self.n_failures, self.policy)


def open_session(request: AccessRequest, catalog: ServiceCatalog, log: HistoryLog,
                 policy: Optional[DecisionPolicy] = None) -> AuthSession:
    """Start a session and make its first decision."""
    policy = policy or DecisionPolicy()
    first = evaluate_access(request, catalog, log, 0, policy)
    return AuthSession(
        request=request,
        catalog=catalog,
        log=log,
        policy=policy,
        stats=first.stats,
        anomaly=first.anomaly,
        decisions=[first],
        penalty=first.penalty,
    )


def _record(session: AuthSession, rank: TrustRank, outcome: AuthOutcome) -> None:
    session.log.record(AuthEvent.now(
        user_id=session.request.user_id,
        service_level=session.request.service_level,
        rank=rank,
        outcome=outcome,
    ))


def _close_failures(session: AuthSession) -> None:
    if session.policy.single_lockout_event and session.failed_rank is not None:
        _record(session, session.failed_rank, AuthOutcome.FAILURE)


def report_attempt(session: AuthSession, outcome: AuthOutcome) -> Tuple[AuthSession, AuthDecision]:
    """Feed the result of presenting the demanded credential back into the session."""
    if session.terminal:
        raise SessionClosedError(f"Session is {session.state.value}; no further attempts accepted")

    logger = get_logger()
    attempted = session.current.rank

    if outcome is AuthOutcome.SUCCESS:
        _close_failures(session)
        _record(session, attempted, AuthOutcome.SUCCESS)
        if session.penalty is not None:
            session.penalty = session.penalty.reset()
        session.state = SessionState.SUCCEEDED
        logger.info("DecisionEngine", f"Session for {session.request.user_id} succeeded with {attempted.value}")
        return session, session.current

    if attempted is TrustRank.HIGH:
        raise ValueError("High rank demands no credential, so there is no attempt that can fail")
    if session.penalty is None:
        raise PenaltyError("Lower threshold 0 leaves no penalty coefficient to apply to failures")

    session.penalty = session.penalty.record_failure()
    if session.failed_rank is None:
        session.failed_rank = attempted
    if not session.policy.single_lockout_event:
        _record(session, attempted, AuthOutcome.FAILURE)

    decision = session._decide()
    session.decisions.append(decision)

    if session.penalty.exhausted:
        session.state = SessionState.LOCKED
        _close_failures(session)
        logger.warning(
            "DecisionEngine",
            f"Session for {session.request.user_id} locked after {session.n_failures} failures",
        )
    else:
        logger.info(
            "DecisionEngine",
            f"Failure {session.n_failures}/{session.request.n_max}: Y'={decision.y_effective:.6f} "
            f"-> {decision.rank.value}",
        )
    return session, decision
