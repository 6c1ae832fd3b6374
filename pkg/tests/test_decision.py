"""
Tests for access decisions and authentication sessions
"""

import sys
sys.path.insert(0, '.')

import pytest

from conftest import TYPICAL_HISTORY, make_events
from trustgate.decision import (
    AccessRequest,
    AnomalyMode,
    DecisionPolicy,
    SessionClosedError,
    SessionState,
    UnknownServiceError,
    decide,
    enforce_rank,
    evaluate_access,
    open_session,
    report_attempt,
)
from trustgate.history import AuthOutcome, HistoryLog, compute_stats, detect_anomaly
from trustgate.logging import LogLevel, MemoryLogHandler, TrustGateLogger, get_logger, set_logger
from trustgate.trust import (
    AuthMethod,
    PenaltyError,
    ThresholdError,
    TrustRank,
    TrustThresholds,
    adjust_thresholds,
    apply_penalty,
    decide_rank,
    penalty_coefficient,
    trust_value,
)


@pytest.fixture
def memory_logger():
    previous = get_logger()
    logger = TrustGateLogger(level=LogLevel.INFO)
    handler = MemoryLogHandler()
    logger.add_handler(handler)
    set_logger(logger)
    yield handler
    set_logger(previous)


def test_evaluate_medium_with_history(catalog, typical_log):
    """Level E with a typical history asks for a PIN."""
    decision = evaluate_access(AccessRequest("alice", "E"), catalog, typical_log)
    assert decision.y == pytest.approx(0.45718, abs=1e-4)
    assert decision.y_effective == decision.y
    assert decision.adjusted.lower_adj == pytest.approx(0.3245, abs=1e-4)
    assert decision.adjusted.upper_adj == pytest.approx(0.7663, abs=1e-4)
    assert decision.rank is TrustRank.MEDIUM
    assert decision.required_method is AuthMethod.PIN
    assert not decision.anomaly.flagged
    assert decision.reasons == ()


def test_most_sensitive_level_needs_biometric(catalog):
    for user_log in (HistoryLog(), HistoryLog(events=make_events("alice", TYPICAL_HISTORY))):
        decision = evaluate_access(AccessRequest("alice", "A"), catalog, user_log)
        assert decision.y == 0.0
        assert decision.rank is TrustRank.LOW
        assert decision.required_method is AuthMethod.BIOMETRIC


def test_three_failures_drop_to_low(catalog, typical_log):
    decision = evaluate_access(AccessRequest("alice", "E"), catalog, typical_log, failures=3)
    assert decision.penalty.p == pytest.approx(0.844, abs=5e-4)
    assert decision.y_effective == pytest.approx(0.2749, abs=1e-3)
    assert decision.region_rank is TrustRank.LOW
    assert decision.rank is TrustRank.LOW


def test_matches_manual_composition(catalog, typical_log):
    """The decision is the trust functions chained by hand."""
    thresholds = TrustThresholds(0.25, 0.8)
    request = AccessRequest("alice", "D", thresholds=thresholds, n_max=4)
    decision = evaluate_access(request, catalog, typical_log, failures=2)

    stats = compute_stats(typical_log, "alice")
    adjusted = adjust_thresholds(thresholds, stats)
    y = trust_value(catalog.get("D").sensitive_value, thresholds, catalog).y
    y_effective = apply_penalty(y, penalty_coefficient(thresholds, 4), 2)

    assert decision.y == y
    assert decision.y_effective == y_effective
    assert decision.adjusted == adjusted
    assert decision.region_rank is decide_rank(y_effective, adjusted)


def test_unknown_level_rejected(catalog):
    with pytest.raises(UnknownServiceError):
        evaluate_access(AccessRequest("alice", "Z"), catalog, HistoryLog())


def test_invalid_request_rejected(catalog):
    with pytest.raises(ThresholdError):
        AccessRequest("alice", "E", thresholds=TrustThresholds(0.6, 0.7))
    with pytest.raises(PenaltyError):
        AccessRequest("alice", "E", n_max=0)
    with pytest.raises(PenaltyError):
        evaluate_access(AccessRequest("alice", "E"), catalog, HistoryLog(), failures=-1)


def test_zero_lower_threshold(catalog):
    request = AccessRequest("alice", "E", thresholds=TrustThresholds(0.0, 0.7))
    decision = evaluate_access(request, catalog, HistoryLog())
    assert decision.penalty is None
    with pytest.raises(PenaltyError):
        evaluate_access(request, catalog, HistoryLog(), failures=1)


def test_anomaly_demotes(catalog, flagged_log):
    decision = evaluate_access(AccessRequest("mallory", "E"), catalog, flagged_log)
    assert decision.anomaly.flagged
    assert decision.region_rank is TrustRank.MEDIUM
    assert decision.rank is TrustRank.LOW
    assert decision.required_method is AuthMethod.BIOMETRIC
    assert any("anomaly" in reason for reason in decision.reasons)


def test_anomaly_mode_off(catalog, flagged_log):
    policy = DecisionPolicy(anomaly_mode=AnomalyMode.OFF)
    decision = evaluate_access(AccessRequest("mallory", "E"), catalog, flagged_log, policy=policy)
    assert decision.anomaly.flagged
    assert decision.rank is TrustRank.MEDIUM


def test_enforce_rank_policy():
    policy = DecisionPolicy()
    assert enforce_rank(TrustRank.HIGH, 0, 5, False, policy) == (TrustRank.HIGH, ())

    rank, reasons = enforce_rank(TrustRank.HIGH, 1, 5, False, policy)
    assert rank is TrustRank.MEDIUM
    assert len(reasons) == 1

    rank, _ = enforce_rank(TrustRank.HIGH, 1, 5, False, DecisionPolicy(cap_after_failure=False))
    assert rank is TrustRank.HIGH

    rank, _ = enforce_rank(TrustRank.MEDIUM, 5, 5, False, policy)
    assert rank is TrustRank.LOW
    rank, _ = enforce_rank(TrustRank.MEDIUM, 5, 5, False, policy, lockout=False)
    assert rank is TrustRank.MEDIUM

    rank, _ = enforce_rank(TrustRank.HIGH, 0, 5, True, DecisionPolicy(anomaly_mode=AnomalyMode.FORCE_LOW))
    assert rank is TrustRank.LOW


def test_decide_with_fixed_snapshot(catalog, typical_log):
    stats = compute_stats(typical_log, "alice")
    anomaly = detect_anomaly(typical_log, "alice")
    decision = decide(AccessRequest("alice", "E"), catalog, stats, anomaly, failures=1)
    assert decision.n_failures == 1
    assert decision.y_effective == pytest.approx(0.38586, abs=1e-4)
    assert decision.rank is TrustRank.MEDIUM


def test_session_failures(catalog, typical_log):
    before = len(typical_log)
    session = open_session(AccessRequest("alice", "E"), catalog, typical_log)
    assert session.current.rank is TrustRank.MEDIUM

    session, decision = report_attempt(session, AuthOutcome.FAILURE)
    assert decision.y_effective == pytest.approx(0.38586, abs=1e-4)
    assert decision.rank is TrustRank.MEDIUM

    session, decision = report_attempt(session, AuthOutcome.FAILURE)
    assert decision.y_effective == pytest.approx(0.3257, abs=1e-3)
    assert decision.rank is TrustRank.MEDIUM

    session, decision = report_attempt(session, AuthOutcome.FAILURE)
    assert decision.rank is TrustRank.LOW
    assert decision.required_method is AuthMethod.BIOMETRIC
    assert session.n_failures == 3
    assert not session.terminal
    # failures inside an open session are not logged one by one
    assert len(typical_log) == before


def test_session_locks_after_n_max(catalog, typical_log):
    before = len(typical_log)
    session = open_session(AccessRequest("alice", "E", n_max=5), catalog, typical_log)
    for _ in range(5):
        session, decision = report_attempt(session, AuthOutcome.FAILURE)

    assert session.state is SessionState.LOCKED
    assert session.terminal
    assert decision.rank is TrustRank.LOW
    assert len(typical_log) == before + 1
    last = typical_log.snapshot()[-1]
    assert last.outcome is AuthOutcome.FAILURE
    # the credential that failed first was the PIN, not the biometric demanded at lockout
    assert last.rank_at_attempt is TrustRank.MEDIUM
    assert last.method is AuthMethod.PIN

    with pytest.raises(SessionClosedError):
        report_attempt(session, AuthOutcome.SUCCESS)


def test_locked_session_counts_as_pin_failure(catalog, typical_log):
    stats_before = compute_stats(typical_log, "alice")
    session = open_session(AccessRequest("alice", "E", n_max=5), catalog, typical_log)
    for _ in range(5):
        session, _ = report_attempt(session, AuthOutcome.FAILURE)

    stats_after = compute_stats(typical_log, "alice")
    assert stats_after.pin_attempts == stats_before.pin_attempts + 1
    assert stats_after.pin_successes == stats_before.pin_successes
    assert stats_after.biometric_attempts == stats_before.biometric_attempts
    assert stats_after.t2 < stats_before.t2


def test_success_after_failures_records_both(catalog, typical_log):
    before = len(typical_log)
    session = open_session(AccessRequest("alice", "E"), catalog, typical_log)
    for _ in range(3):
        session, _ = report_attempt(session, AuthOutcome.FAILURE)
    assert session.current.rank is TrustRank.LOW
    session, _ = report_attempt(session, AuthOutcome.SUCCESS)

    assert session.state is SessionState.SUCCEEDED
    assert session.n_failures == 0
    added = typical_log.snapshot()[before:]
    assert [(e.method, e.outcome) for e in added] == [
        (AuthMethod.PIN, AuthOutcome.FAILURE),
        (AuthMethod.BIOMETRIC, AuthOutcome.SUCCESS),
    ]


def test_session_tracks_penalty_state(catalog, typical_log):
    session = open_session(AccessRequest("alice", "E", n_max=5), catalog, typical_log)
    assert session.penalty.n_failures == 0
    assert session.penalty.p == pytest.approx(0.844121, abs=1e-6)
    session, decision = report_attempt(session, AuthOutcome.FAILURE)
    assert session.penalty.n_failures == 1
    assert decision.penalty == session.penalty
    assert not session.penalty.exhausted


def test_session_without_penalty_cannot_fail(catalog):
    request = AccessRequest("erin", "E", thresholds=TrustThresholds(0.0, 0.7))
    session = open_session(request, catalog, HistoryLog())
    assert session.penalty is None
    with pytest.raises(PenaltyError):
        report_attempt(session, AuthOutcome.FAILURE)


def test_session_logs_every_failure_when_configured(catalog):
    log = HistoryLog()
    policy = DecisionPolicy(single_lockout_event=False)
    session = open_session(AccessRequest("erin", "E", n_max=3), catalog, log, policy)
    for _ in range(3):
        session, _ = report_attempt(session, AuthOutcome.FAILURE)
    assert len(log) == 3
    assert session.state is SessionState.LOCKED


def test_session_success(catalog, typical_log):
    before = len(typical_log)
    session = open_session(AccessRequest("alice", "E"), catalog, typical_log)
    session, decision = report_attempt(session, AuthOutcome.SUCCESS)

    assert session.state is SessionState.SUCCEEDED
    assert session.n_failures == 0
    assert len(typical_log) == before + 1
    event = typical_log.snapshot()[-1]
    assert event.outcome is AuthOutcome.SUCCESS
    assert event.method is AuthMethod.PIN

    with pytest.raises(SessionClosedError):
        report_attempt(session, AuthOutcome.FAILURE)


def test_high_rank_cannot_fail(catalog):
    session = open_session(AccessRequest("frank", "I"), catalog, HistoryLog())
    assert session.current.rank is TrustRank.HIGH
    with pytest.raises(ValueError):
        report_attempt(session, AuthOutcome.FAILURE)


def test_decision_logged_with_correlation_id(catalog, typical_log, memory_logger):
    evaluate_access(AccessRequest("alice", "E"), catalog, typical_log)
    entries = [e for e in memory_logger.entries if e.source == "DecisionEngine"]
    assert len(entries) == 1
    assert entries[0].correlation_id == "alice"
    assert entries[0].details["rank"] == "Medium"
    assert get_logger().get_current_correlation_id() is None


def test_decision_to_dict(catalog, typical_log):
    data = evaluate_access(AccessRequest("alice", "E"), catalog, typical_log).to_dict()
    assert data["level"] == "E"
    assert data["required_method"] == "PIN"
    assert data["stats"]["t1"] == pytest.approx(0.4)
    assert data["penalty"]["n_failures"] == 0


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
