"""Parameter checks shared by the estimators and the CLI."""

from __future__ import annotations

import math

from .errors import ConfigError


def check_positive_int(value, name, allow_none=False):
    if value is None and allow_none:
        return value
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")
    return value


def check_positive(value, name):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0 or math.isinf(value):
        raise ConfigError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def check_unit_interval(value, name):
    if not isinstance(value, (int, float)) or not 0.0 <= value <= 1.0:
        raise ConfigError(f"{name} must lie in [0, 1], got {value!r}")
    return float(value)


def check_score_weights(weights):
    """Score weights must be three non-negative numbers summing to one."""
    try:
        w = tuple(float(x) for x in weights)
    except (TypeError, ValueError):
        raise ConfigError(f"score weights must be numbers, got {weights!r}") from None
    if len(w) != 3:
        raise ConfigError(f"expected three score weights, got {len(w)}")
    if any(x < 0 for x in w) or not math.isclose(sum(w), 1.0, abs_tol=1e-9):
        raise ConfigError(f"score weights must be non-negative and sum to 1, got {w}")
    return w


def check_choice(value, name, choices):
    if value not in choices:
        raise ConfigError(f"{name} must be one of {sorted(choices)}, got {value!r}")
    return value
