"""Single-RAO estimation of the number of contending devices.

Every active device scans the ``J`` preambles of the estimation RAO in order
and transmits preamble ``j`` with probability ``p_j = p0 / alpha**j`` unless it
already transmitted an earlier one, so a device sends at most one preamble.
The base station only sees a ternary state per preamble (idle, singleton,
collision) and recovers the device count by maximum likelihood.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from scipy.optimize import minimize_scalar
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive_int, check_ternary_matrix

__all__ = [
    "PreambleState",
    "EstimatorConfig",
    "PreambleObservation",
    "Estimate",
    "selection_probabilities",
    "survival_factors",
    "transmit_probabilities",
    "draw_preamble_choices",
    "preamble_counts",
    "simulate_estimation_rao",
    "log_likelihood",
    "estimate",
    "CardinalityEstimator",
]


class PreambleState(IntEnum):
    IDLE = 0
    SINGLETON = 1
    COLLISION = 2


@dataclass(frozen=True)
class EstimatorConfig:
    """Parameters of the geometric preamble-selection profile.

    The defaults cover device counts between 1 and 30000 with 54 preambles.
    ``n_max`` bounds the likelihood search.
    """

    p0: float = 0.001
    alpha: float = 1.056
    n_preambles: int = 54
    n_max: int = 60000

    def __post_init__(self):
        if not (0 < self.p0 <= 1):
            raise ValueError(f"p0 must lie in (0, 1], got {self.p0}")
        if not self.alpha > 1:
            raise ValueError(f"alpha must be > 1, got {self.alpha}")
        check_positive_int(self.n_preambles, "n_preambles")
        check_positive_int(self.n_max, "n_max")


@dataclass(frozen=True)
class PreambleObservation:
    """Ternary outcome of one estimation RAO; multiplicities are never kept."""

    states: tuple[PreambleState, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(PreambleState(int(s)) for s in self.states))

    @classmethod
    def from_counts(cls, counts) -> "PreambleObservation":
        counts = np.asarray(counts)
        return cls(tuple(np.minimum(counts, 2).tolist()))

    def __len__(self) -> int:
        return len(self.states)

    def as_array(self) -> np.ndarray:
        return np.fromiter((int(s) for s in self.states), dtype=np.int8, count=len(self.states))


@dataclass(frozen=True)
class Estimate:
    n_hat: int
    log_likelihood_at_n_hat: float
    clamped: bool


def selection_probabilities(config: EstimatorConfig) -> np.ndarray:
    """Return ``p_j = p0 / alpha**j`` for ``j = 1..J``."""
    j = np.arange(1, config.n_preambles + 1, dtype=float)
    return config.p0 / config.alpha**j


def survival_factors(config: EstimatorConfig) -> np.ndarray:
    """Probability that a device has not transmitted any of preambles ``1..j-1``."""
    p = selection_probabilities(config)
    a = np.ones_like(p)
    a[1:] = np.cumprod(1.0 - p[:-1])
    return a


def transmit_probabilities(config: EstimatorConfig) -> np.ndarray:
    """Per-preamble transmit probability ``a_j * p_j`` followed by the no-transmission mass."""
    tx = survival_factors(config) * selection_probabilities(config)
    return np.append(tx, max(0.0, 1.0 - tx.sum()))


def draw_preamble_choices(n: int, config: EstimatorConfig, rng: np.random.Generator) -> np.ndarray:
    """Preamble index (0-based) picked by each of ``n`` devices, or -1 for silence."""
    probs = transmit_probabilities(config)
    choice = rng.choice(config.n_preambles + 1, size=int(n), p=probs)
    choice[choice == config.n_preambles] = -1
    return choice


def preamble_counts(n: int, config: EstimatorConfig, rng: np.random.Generator) -> np.ndarray:
    """Number of devices that transmitted each preamble.

    Devices act independently, so the vector is multinomial with the
    per-preamble transmit probabilities; the silent devices are dropped.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    return rng.multinomial(int(n), transmit_probabilities(config))[:-1]


def simulate_estimation_rao(n: int, config: EstimatorConfig, rng: np.random.Generator) -> PreambleObservation:
    return PreambleObservation.from_counts(preamble_counts(n, config, rng))


def _loglik(states: np.ndarray, n: float, a: np.ndarray, p: np.ndarray, log1m_p: np.ndarray) -> float:
    # m = a_j * n devices are expected to still be eligible for preamble j;
    # each state probability is the binomial (m, p_j) mass with real-valued m.
    m = a * n
    idle = states == PreambleState.IDLE
    single = states == PreambleState.SINGLETON
    coll = states == PreambleState.COLLISION
    total = float(np.dot(m[idle], log1m_p[idle]))
    if single.any():
        if n <= 0:
            return -math.inf
        ms = m[single]
        total += float(np.sum(np.log(ms) + np.log(p[single]) + (ms - 1.0) * log1m_p[single]))
    if coll.any():
        if n <= 0:
            return -math.inf
        mc, pc, lc = m[coll], p[coll], log1m_p[coll]
        prob = -np.expm1(mc * lc) - mc * pc * np.exp((mc - 1.0) * lc)
        if np.any(prob <= 0):
            return -math.inf
        total += float(np.sum(np.log(prob)))
    return total


def _as_states(obs, config: EstimatorConfig) -> np.ndarray:
    states = obs.as_array() if isinstance(obs, PreambleObservation) else np.minimum(np.asarray(obs, dtype=np.int64), 2)
    if states.shape != (config.n_preambles,):
        raise ValueError(
            f"observation has {states.size} preambles, config expects {config.n_preambles}"
        )
    return states


def log_likelihood(obs, n: float, config: EstimatorConfig) -> float:
    """Approximate log-likelihood of ``n`` contenders given the ternary observation.

    Returns ``-inf`` for impossible combinations, e.g. a collision with ``n = 0``.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    p = selection_probabilities(config)
    return _loglik(_as_states(obs, config), float(n), survival_factors(config), p, np.log1p(-p))


def estimate(obs, config: EstimatorConfig) -> Estimate:
    """Maximum-likelihood device count in ``[0, n_max]``.

    The continuous relaxation is maximised with a bounded scalar search, then
    the integers flanking the optimum are compared (smaller ``n`` wins ties).
    An all-idle observation gives 0 and an all-collision one saturates at
    ``n_max``; both are flagged as clamped.
    """
    states = _as_states(obs, config)
    p = selection_probabilities(config)
    a = survival_factors(config)
    log1m_p = np.log1p(-p)

    def ll(n: float) -> float:
        return _loglik(states, n, a, p, log1m_p)

    n_max = config.n_max
    if not np.any(states):
        return Estimate(0, 0.0, True)

    # A collision on preamble j needs more than one eligible device: a_j * n > 1.
    coll = states == PreambleState.COLLISION
    lower = float(np.max(1.0 / a[coll])) if coll.any() else 0.0
    first_int = math.floor(lower) + 1
    if first_int >= n_max:
        return Estimate(n_max, ll(n_max), True)

    res = minimize_scalar(
        lambda x: -ll(x),
        bounds=(lower + 1e-6, float(n_max)),
        method="bounded",
        options={"xatol": 1e-3},
    )
    centre = float(res.x)
    lo = max(first_int, math.floor(centre) - 1)
    hi = min(n_max, math.ceil(centre) + 1)
    best_n, best_ll = None, -math.inf
    for cand in range(lo, hi + 1):
        val = ll(cand)
        if val > best_ll:
            best_n, best_ll = cand, val
    if best_n is None:
        best_n, best_ll = n_max, ll(n_max)
    return Estimate(best_n, best_ll, best_n in (0, n_max))


class CardinalityEstimator(BaseEstimator):
    """Estimator wrapper around :func:`estimate`.

    ``X`` holds one estimation RAO per row and one preamble per column, with
    entries 0 (idle), 1 (singleton) or 2 (collision); larger counts are folded
    into the collision state. Nothing is learned by ``fit``: the selection
    profile is fixed a priori, so ``fit`` only validates and caches it.

    Parameters
    ----------
    p0, alpha : float
        Geometric selection profile ``p_j = p0 / alpha**j``.
    n_preambles : int
        Preambles per RAO.
    n_max : int
        Upper end of the search range.
    """

    def __init__(self, p0: float = 0.001, alpha: float = 1.056, n_preambles: int = 54, n_max: int = 60000):
        self.p0 = p0
        self.alpha = alpha
        self.n_preambles = n_preambles
        self.n_max = n_max

    def _config(self) -> EstimatorConfig:
        return EstimatorConfig(self.p0, self.alpha, self.n_preambles, self.n_max)

    def fit(self, X=None, y=None):
        self.config_ = self._config()
        if X is not None:
            check_ternary_matrix(X, self.n_preambles)
        self.n_features_in_ = self.n_preambles
        self.selection_probabilities_ = selection_probabilities(self.config_)
        self.survival_factors_ = survival_factors(self.config_)
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "config_")
        X = check_ternary_matrix(X, self.n_preambles)
        return np.array([estimate(row, self.config_).n_hat for row in X], dtype=np.int64)

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).predict(X)

    def sample(self, n_devices, random_state=None) -> np.ndarray:
        """Draw one ternary observation row per entry of ``n_devices``."""
        check_is_fitted(self, "config_")
        rng = np.random.default_rng(random_state)
        counts = np.atleast_1d(np.asarray(n_devices, dtype=np.int64))
        return np.vstack([np.minimum(preamble_counts(int(n), self.config_, rng), 2) for n in counts])
