"""
Shared fixtures
"""

import sys
from datetime import datetime, timedelta, timezone
from typing import List

sys.path.insert(0, '.')

import pytest

from trustgate.ahp import reference_catalog
from trustgate.history import AuthEvent, AuthOutcome, HistoryLog
from trustgate.trust import TrustRank


START = datetime(2024, 1, 1, tzinfo=timezone.utc)


def make_events(user: str, runs: List[tuple], level: str = "E") -> List[AuthEvent]:
    """Events one minute apart from (count, rank, outcome) groups."""
    events = []
    for count, rank, outcome in runs:
        for _ in range(count):
            events.append(AuthEvent(
                timestamp=START + timedelta(minutes=len(events)),
                user_id=user,
                service_level=level,
                rank_at_attempt=rank,
                method=rank.required_method,
                outcome=outcome,
            ))
    return events


# T1 = 8/20 = 0.4, T2 = 9/10 = 0.9
TYPICAL_HISTORY = [
    (8, TrustRank.HIGH, AuthOutcome.SUCCESS),
    (9, TrustRank.MEDIUM, AuthOutcome.SUCCESS),
    (1, TrustRank.MEDIUM, AuthOutcome.FAILURE),
    (2, TrustRank.LOW, AuthOutcome.SUCCESS),
]

# ten clean PIN logins followed by ten with six failures
FLAGGED_HISTORY = [
    (10, TrustRank.MEDIUM, AuthOutcome.SUCCESS),
    (4, TrustRank.MEDIUM, AuthOutcome.SUCCESS),
    (6, TrustRank.MEDIUM, AuthOutcome.FAILURE),
]


@pytest.fixture
def catalog():
    return reference_catalog()


@pytest.fixture
def typical_log():
    return HistoryLog(events=make_events("alice", TYPICAL_HISTORY))


@pytest.fixture
def flagged_log():
    return HistoryLog(events=make_events("mallory", FLAGGED_HISTORY))
