"""Small argument checks shared by the public functions and estimators."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_probability(value, name: str, *, open_low: bool = False, open_high: bool = False) -> float:
    value = float(value)
    low_ok = value > 0 if open_low else value >= 0
    high_ok = value < 1 if open_high else value <= 1
    if not (low_ok and high_ok and np.isfinite(value)):
        lo = "(" if open_low else "["
        hi = ")" if open_high else "]"
        raise ValueError(f"{name} must lie in {lo}0, 1{hi}, got {value}")
    return value


def check_ternary_matrix(X, n_preambles: int | None = None) -> np.ndarray:
    """Validate a 2-D array of ternary preamble states (0 idle, 1 singleton, 2 collision).

    Raw multiplicities are accepted and folded: any count above one becomes a collision.
    """
    X = check_array(X, dtype=np.int64, ensure_2d=True, ensure_min_samples=1)
    if np.any(X < 0):
        raise ValueError("preamble states must be non-negative")
    X = np.minimum(X, 2)
    if n_preambles is not None and X.shape[1] != n_preambles:
        raise ValueError(
            f"X has {X.shape[1]} preamble columns, estimator expects {n_preambles}"
        )
    return X


def check_counts(X) -> np.ndarray:
    """Validate a 1-D array of non-negative device counts."""
    X = np.asarray(X)
    if X.ndim == 2 and X.shape[1] == 1:
        X = X[:, 0]
    X = check_array(X, dtype=np.float64, ensure_2d=False)
    if X.ndim != 1:
        raise ValueError("expected a 1-D array of device counts")
    if np.any(X < 0) or np.any(X != np.round(X)):
        raise ValueError("device counts must be non-negative integers")
    return X.astype(np.int64)
