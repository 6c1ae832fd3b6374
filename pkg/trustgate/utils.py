"""
Utility functions for TrustGate
"""

import json
import yaml
from fractions import Fraction
from typing import Dict, Any, List
from pathlib import Path


def load_config(config_path: str) -> Dict[str, Any]:
    """Load configuration from YAML or JSON file."""
    path = Path(config_path)

    if path.suffix.lower() in ['.yaml', '.yml']:
        with open(path, 'r') as f:
            return yaml.safe_load(f) or {}
    elif path.suffix.lower() == '.json':
        with open(path, 'r') as f:
            return json.load(f)
    else:
        raise ValueError(f"Unsupported config file format: {path.suffix}")


def save_config(config: Dict[str, Any], config_path: str, format: str = 'yaml'):
    """Save configuration to file."""
    path = Path(config_path)

    if path.suffix.lower() == '.json' or format.lower() == 'json':
        with open(path, 'w') as f:
            json.dump(config, f, indent=2)
    elif path.suffix.lower() in ['.yaml', '.yml'] or format.lower() == 'yaml':
        with open(path, 'w') as f:
            yaml.safe_dump(config, f, default_flow_style=False, sort_keys=False)
    else:
        raise ValueError(f"Unsupported format: {format}")


def merge_configs(base_config: Dict[str, Any], override_config: Dict[str, Any]) -> Dict[str, Any]:
    """Recursively merge two configuration dictionaries."""
    result = base_config.copy()

    for key, value in override_config.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = merge_configs(result[key], value)
        else:
            result[key] = value

    return result


def parse_number(text: str) -> float:
    """Parse a decimal or a fraction such as ``1/3`` into a float."""
    cleaned = text.strip()
    if not cleaned:
        raise ValueError("Empty numeric field")
    try:
        if '/' in cleaned:
            return float(Fraction(cleaned.replace(' ', '')))
        return float(cleaned)
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"Not a number: {text!r}") from e


def parse_number_list(text: str) -> List[float]:
    """Parse a comma separated list of decimals or fractions."""
    return [parse_number(part) for part in text.split(',') if part.strip()]


def format_float(value: float, digits: int = 6) -> str:
    """Fixed-point formatting used for every printed number."""
    return f"{value:.{digits}f}"


def frange(start: float, stop: float, step: float) -> List[float]:
    """Inclusive float range built by index so the grid does not drift."""
    if step <= 0:
        raise ValueError("Step must be positive")
    if stop < start:
        raise ValueError(f"Empty range: {start} > {stop}")
    count = int(round((stop - start) / step))
    # the last point may overshoot stop by rounding; drop it
    values = [round(start + i * step, 12) for i in range(count + 1)]
    return [v for v in values if v <= stop + 1e-12]
