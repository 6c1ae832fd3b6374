"""
TrustGate - adaptive authentication from service sensitivity and user history

Services are ranked by pairwise comparison, each request gets a trust value
from the sensitivity of the service it targets, and the trust region that
value lands in (shifted by the user's authentication history and reduced by
failed attempts) decides whether no key, a PIN or a biometric is required.
"""

__version__ = "0.1.0"
__author__ = "TrustGate Contributors"

from .ahp import (
    CatalogEntry,
    ComparisonMatrix,
    ConsistencyError,
    ConsistencyReport,
    MatrixError,
    ServiceCatalog,
    classify,
    consistency_check,
    insert_service,
    lambda_max,
    normalize_weights,
    reference_catalog,
    row_geometric_means,
    validate_matrix,
)
from .trust import (
    AuthMethod,
    PenaltyError,
    SensitivityError,
    ThresholdError,
    TrustRank,
    TrustThresholds,
    adjust_thresholds,
    apply_penalty,
    decide_rank,
    penalty_coefficient,
    trust_value,
)
from .history import (
    AuthEvent,
    AuthHistoryStats,
    AuthOutcome,
    HistoryLog,
    compute_stats,
    detect_anomaly,
    record_event,
)
from .decision import (
    AccessRequest,
    AuthDecision,
    DecisionPolicy,
    evaluate_access,
    open_session,
    report_attempt,
)
from .simulation import sweep_lower_thresholds, sweep_penalty, sweep_thresholds
from .config import TrustGateConfig, ConfigManager
from .logging import TrustGateLogger, get_logger

__all__ = [
    "CatalogEntry",
    "ComparisonMatrix",
    "ConsistencyError",
    "ConsistencyReport",
    "MatrixError",
    "ServiceCatalog",
    "classify",
    "consistency_check",
    "insert_service",
    "lambda_max",
    "normalize_weights",
    "reference_catalog",
    "row_geometric_means",
    "validate_matrix",
    "AuthMethod",
    "PenaltyError",
    "SensitivityError",
    "ThresholdError",
    "TrustRank",
    "TrustThresholds",
    "adjust_thresholds",
    "apply_penalty",
    "decide_rank",
    "penalty_coefficient",
    "trust_value",
    "AuthEvent",
    "AuthHistoryStats",
    "AuthOutcome",
    "HistoryLog",
    "compute_stats",
    "detect_anomaly",
    "record_event",
    "AccessRequest",
    "AuthDecision",
    "DecisionPolicy",
    "evaluate_access",
    "open_session",
    "report_attempt",
    "sweep_lower_thresholds",
    "sweep_penalty",
    "sweep_thresholds",
    "TrustGateConfig",
    "ConfigManager",
    "TrustGateLogger",
    "get_logger",
]
