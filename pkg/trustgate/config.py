"""
Configuration management for TrustGate
"""

import json
import os
from dataclasses import dataclass, field
from typing import Dict, Any, Optional, List

import yaml

from .history import AnomalyRule
from .utils import load_config, save_config, merge_configs


ANOMALY_MODES = ("off", "demote", "force_low")


@dataclass
class ThresholdConfig:
    """Default customer thresholds."""
    lower: float = 0.3
    upper: float = 0.7


@dataclass
class PenaltyConfig:
    """Failure penalty settings."""
    n_max: int = 5
    # a request with failures behind it is never granted the no-key rank
    cap_after_failure: bool = True
    # terminal sessions log one Failure event instead of one per trial
    single_lockout_event: bool = True


@dataclass
class AnomalyConfig:
    """Good-record-turned-bad detection; none of these values come from data."""
    recent_window: int = 10
    min_events: int = 5
    good_record: float = 0.8
    delta: float = 0.3
    mode: str = "demote"

    def rule(self) -> AnomalyRule:
        return AnomalyRule(
            recent_window=self.recent_window,
            min_events=self.min_events,
            good_record=self.good_record,
            delta=self.delta,
        )


@dataclass
class PathsConfig:
    catalog_path: str = "catalog.json"
    history_path: str = "history.jsonl"


@dataclass
class TrustGateConfig:
    """Main configuration for TrustGate."""
    version: str = "1.0"
    thresholds: ThresholdConfig = field(default_factory=ThresholdConfig)
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    anomaly: AnomalyConfig = field(default_factory=AnomalyConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)
    history_window: Optional[int] = None
    log_level: str = "WARNING"
    log_file: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        """Convert configuration to dictionary."""
        return {
            "version": self.version,
            "thresholds": {
                "lower": self.thresholds.lower,
                "upper": self.thresholds.upper,
            },
            "penalty": {
                "n_max": self.penalty.n_max,
                "cap_after_failure": self.penalty.cap_after_failure,
                "single_lockout_event": self.penalty.single_lockout_event,
            },
            "anomaly": {
                "recent_window": self.anomaly.recent_window,
                "min_events": self.anomaly.min_events,
                "good_record": self.anomaly.good_record,
                "delta": self.anomaly.delta,
                "mode": self.anomaly.mode,
            },
            "paths": {
                "catalog_path": self.paths.catalog_path,
                "history_path": self.paths.history_path,
            },
            "history_window": self.history_window,
            "log_level": self.log_level,
            "log_file": self.log_file,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TrustGateConfig':
        """Create configuration from dictionary; missing keys keep their defaults."""
        data = merge_configs(cls().to_dict(), data or {})
        try:
            return cls(
                version=str(data["version"]),
                thresholds=ThresholdConfig(**data["thresholds"]),
                penalty=PenaltyConfig(**data["penalty"]),
                anomaly=AnomalyConfig(**data["anomaly"]),
                paths=PathsConfig(**data["paths"]),
                history_window=data["history_window"],
                log_level=str(data["log_level"]).upper(),
                log_file=data["log_file"],
            )
        except TypeError as e:
            raise ValueError(f"Unknown configuration key: {e}") from e


def validate_config(config: TrustGateConfig) -> List[str]:
    """Return a list of problems with a configuration; empty when valid."""
    errors = []

    lower, upper = config.thresholds.lower, config.thresholds.upper
    if not (0.0 <= lower <= 0.5 < upper <= 1.0):
        errors.append(f"Thresholds must satisfy 0 <= lower <= 0.5 < upper <= 1 (got {lower}, {upper})")

    if not isinstance(config.penalty.n_max, int) or config.penalty.n_max < 1:
        errors.append("penalty.n_max must be a positive integer")
    if lower == 0.0:
        errors.append("thresholds.lower of 0 leaves no usable penalty coefficient")

    anomaly = config.anomaly
    if anomaly.mode not in ANOMALY_MODES:
        errors.append(f"anomaly.mode must be one of {', '.join(ANOMALY_MODES)}")
    if anomaly.recent_window < 1:
        errors.append("anomaly.recent_window must be positive")
    if anomaly.min_events < 1:
        errors.append("anomaly.min_events must be positive")
    if not 0.0 <= anomaly.good_record <= 1.0:
        errors.append("anomaly.good_record must lie in [0, 1]")
    if not 0.0 <= anomaly.delta <= 1.0:
        errors.append("anomaly.delta must lie in [0, 1]")

    if config.history_window is not None and config.history_window < 1:
        errors.append("history_window must be positive when set")

    if config.log_level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        errors.append(f"Unknown log level: {config.log_level}")

    return errors


class ConfigManager:
    """Loads, saves and validates the configuration file."""

    def __init__(self, config_path: Optional[str] = None, load: bool = True):
        self.config_path = config_path or "trustgate.yaml"
        self.config: TrustGateConfig = TrustGateConfig()

        if load and os.path.exists(self.config_path):
            self.load_config()

    def load_config(self) -> None:
        """Load configuration from file."""
        if not os.path.exists(self.config_path):
            raise FileNotFoundError(f"Configuration file not found: {self.config_path}")

        try:
            raw_config = load_config(self.config_path)
        except (yaml.YAMLError, json.JSONDecodeError) as e:
            raise ValueError(f"Cannot parse {self.config_path}: {e}") from e
        if not isinstance(raw_config, dict):
            raise ValueError(f"Configuration file {self.config_path} must contain a mapping")
        self.config = TrustGateConfig.from_dict(raw_config)

    def save_config(self) -> None:
        """Save configuration to file."""
        save_config(self.config.to_dict(), self.config_path)

    def validate_config(self) -> List[str]:
        return validate_config(self.config)


_config_manager: Optional[ConfigManager] = None


def get_config_manager() -> ConfigManager:
    """Get the global configuration manager instance."""
    global _config_manager
    if _config_manager is None:
        _config_manager = ConfigManager()
    return _config_manager


def set_config_manager(manager: ConfigManager) -> None:
    """Set the global configuration manager instance."""
    global _config_manager
    _config_manager = manager
