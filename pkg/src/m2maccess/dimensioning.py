"""Reliability of the two-frame serving phase and its dimensioning.

The serving phase has ``S`` RAOs with ``J`` preambles each, split into a first
frame of ``S1`` RAOs and a second frame of ``S - S1`` RAOs. Every admitted
device transmits once in the first frame; devices that collided retry once in
the second frame.

Two reliability models are available through the ``model`` argument:

``"exact"`` (default)
    Per-device success probability ``P1 + E[K x**(K-1)] / n``, with ``K`` the
    number of devices that collided in the first frame and
    ``x = 1 - 1/((S - S1) J)``. Agrees with Monte Carlo of the contention.
``"mixture"``
    ``P1 + (1 - P1) * P2`` with ``P2 = sum_{k>=2} x**(k-1) Pr[K = k]``, i.e.
    the second-frame term averaged over the unconditional collision count.
    It slightly misstates the per-device probability because a tagged
    collided device sees a size-biased ``K``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.stats import binom
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_counts, check_positive_int, check_probability
from .occupancy import (
    all_singleton_probability,
    collision_pgf,
    collision_pgf_derivative,
    success_pmf,
)

__all__ = [
    "ContentionSpace",
    "FrameBudget",
    "ServingPlan",
    "TwoClassPlan",
    "Requirement",
    "p1_success",
    "p2_success",
    "reliability",
    "reliability_from_pmf",
    "optimal_split",
    "required_raos",
    "reliability_with_barring",
    "optimal_barring",
    "dimension_single",
    "dimension_two_class",
    "ServingPhaseDimensioner",
    "MODELS",
]

MODELS = ("exact", "mixture")
FULL_SCAN_MAX = 512
BARRING_EXACT_MAX = 2000
_MAX_RAOS = 1 << 22


@dataclass(frozen=True)
class ContentionSpace:
    """First-frame size ``s1``, total serving RAOs ``s`` and preambles per RAO ``j``.

    ``s1 == s`` describes a single frame with no retry.
    """

    s1: int
    s: int
    j: int

    def __post_init__(self):
        check_positive_int(self.s1, "s1")
        check_positive_int(self.j, "j")
        if self.s < self.s1:
            raise ValueError(f"s must be >= s1, got s={self.s}, s1={self.s1}")

    @property
    def m1(self) -> int:
        return self.s1 * self.j

    @property
    def m2(self) -> int:
        return (self.s - self.s1) * self.j


@dataclass(frozen=True)
class FrameBudget:
    """Access-frame budget: ``L`` RAOs per frame, delay bound ``tau`` (s), target reliability."""

    L: int
    tau: float
    r_req: float

    def __post_init__(self):
        check_positive_int(self.L, "L", minimum=2)
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        check_probability(self.r_req, "r_req", open_low=True, open_high=True)

    @property
    def frame_duration(self) -> float:
        return self.tau / 2


@dataclass(frozen=True)
class ServingPlan:
    s: int
    s1: int
    q: float
    predicted_reliability: float
    s_req: int | None = None

    def space_for(self, j: int) -> ContentionSpace | None:
        return None if self.s == 0 else ContentionSpace(self.s1, self.s, j)


@dataclass(frozen=True)
class TwoClassPlan:
    plan1: ServingPlan
    plan2: ServingPlan
    regime: int


class Requirement(NamedTuple):
    s: int
    s1: int
    reliability: float


def _check_model(model: str) -> str:
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}, got {model!r}")
    return model


def p1_success(n: int, space: ContentionSpace) -> float:
    """First-frame success probability ``(1 - 1/(S1 J))**(n-1)``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return (1.0 - 1.0 / space.m1) ** (n - 1)


def _second_frame_x(space: ContentionSpace) -> float | None:
    return None if space.m2 == 0 else 1.0 - 1.0 / space.m2


def p2_success(n: int, space: ContentionSpace, *, conditional: bool = False) -> float:
    """Second-frame success term.

    By default the mixture ``sum_{k=2..n} x**(k-1) Pr[N_C = k]`` over the
    unconditional collision count. With ``conditional=True`` the probability
    that a device which collided in the first frame succeeds in the second.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    x = _second_frame_x(space)
    if x is None or n == 1:
        return 0.0
    if conditional:
        miss = 1.0 - p1_success(n, space)
        if miss <= 0:
            return 0.0
        return min(1.0, collision_pgf_derivative(n, space.m1, x) / (n * miss))
    if x == 0.0:
        return 0.0
    val = (collision_pgf(n, space.m1, x) - all_singleton_probability(n, space.m1)) / x
    return min(1.0, max(0.0, val))


@lru_cache(maxsize=200_000)
def _reliability(n: int, m1: int, m2: int, model: str) -> float:
    p1 = (1.0 - 1.0 / m1) ** (n - 1)
    if m2 == 0 or n == 1:
        return p1
    x = 1.0 - 1.0 / m2
    if model == "exact":
        val = p1 + collision_pgf_derivative(n, m1, x) / n
    else:
        p2 = 0.0 if x == 0 else (collision_pgf(n, m1, x) - all_singleton_probability(n, m1)) / x
        val = p1 + (1.0 - p1) * max(0.0, p2)
    return min(1.0, max(0.0, val))


def reliability(n: int, space: ContentionSpace, model: str = "exact") -> float:
    """Probability that one of ``n`` contenders obtains a resource in the serving phase."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return _reliability(int(n), space.m1, space.m2, _check_model(model))


def reliability_from_pmf(n: int, space: ContentionSpace, model: str = "exact") -> float:
    """Same quantity as :func:`reliability`, summed term by term over the collision pmf.

    Exact arithmetic is used for small ``n``, so this serves as an independent
    check of the generating-function evaluation.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    p1 = p1_success(n, space)
    if space.m2 == 0:
        return p1
    pmf_s = success_pmf(n, space.m1).pmf
    k = np.arange(n + 1)
    pk = pmf_s[n - k]
    x = 1.0 - 1.0 / space.m2
    mask = k >= 2
    if _check_model(model) == "exact":
        return float(p1 + np.sum(k[mask] * x ** (k[mask] - 1) * pk[mask]) / n)
    return float(p1 + (1 - p1) * np.sum(x ** (k[mask] - 1) * pk[mask]))


def _split_profile(n: int, s_total: int, j: int, model: str, s1_values) -> list[float]:
    return [_reliability(n, a * j, (s_total - a) * j, model) for a in s1_values]


def _best_split(n: int, s_total: int, j: int, model: str, full_scan: bool | None) -> tuple[int, float]:
    if s_total == 1:
        return 1, _reliability(n, j, 0, model) if n >= 1 else 1.0
    if n <= 1:
        return 1, 1.0
    scan = full_scan if full_scan is not None else s_total <= FULL_SCAN_MAX
    if scan:
        vals = _split_profile(n, s_total, j, model, range(1, s_total))
        idx = int(np.argmax(vals))
        return idx + 1, vals[idx]

    def f(a: int) -> float:
        return _reliability(n, a * j, (s_total - a) * j, model)

    # golden-section search over integers on the unimodal split profile
    invphi = (math.sqrt(5) - 1) / 2
    lo, hi = 1, s_total - 1
    while hi - lo > 3:
        c = lo + int(round((1 - invphi) * (hi - lo)))
        d = max(c + 1, lo + int(round(invphi * (hi - lo))))
        if f(c) >= f(d):
            hi = d - 1
        else:
            lo = c + 1
    best_a, best_v = lo, f(lo)
    for a in range(lo + 1, hi + 1):
        v = f(a)
        if v > best_v:
            best_a, best_v = a, v
    return best_a, best_v


def optimal_split(n: int, s_total: int, j: int, *, model: str = "exact", full_scan: bool | None = None) -> int:
    """First-frame size maximising reliability for a fixed total ``s_total``.

    A full scan is used up to 512 RAOs and a golden-section search beyond;
    ``full_scan`` forces either. Ties go to the smaller split.
    """
    check_positive_int(s_total, "s_total", minimum=2)
    return _best_split(int(n), int(s_total), int(j), _check_model(model), full_scan)[0]


@lru_cache(maxsize=50_000)
def _required(n: int, r_req: float, j: int, model: str) -> Requirement:
    if n <= 1:
        return Requirement(2, 1, 1.0)

    def best(s: int) -> tuple[int, float]:
        return _best_split(n, s, j, model, None)

    lo, hi = 1, 2
    s1, val = best(hi)
    while val < r_req:
        lo, hi = hi, hi * 2
        if hi > _MAX_RAOS:
            raise ValueError(f"no serving phase below {_MAX_RAOS} RAOs reaches r_req={r_req} for n={n}")
        s1, val = best(hi)
    # invariant: best(lo) < r_req <= best(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        s1_mid, v_mid = best(mid)
        if v_mid >= r_req:
            hi, s1, val = mid, s1_mid, v_mid
        else:
            lo = mid
    return Requirement(hi, s1, val)


def required_raos(n: int, r_req: float, j: int, *, model: str = "exact") -> Requirement:
    """Smallest serving-phase size whose best split meets ``r_req``.

    Exponential bracketing followed by bisection; relies on the best-split
    reliability being nondecreasing in the number of RAOs. ``n <= 1`` gives
    the minimal two-frame structure ``S = 2``.
    """
    check_probability(r_req, "r_req", open_low=True, open_high=True)
    return _required(int(n), float(r_req), int(j), _check_model(model))


@lru_cache(maxsize=4096)
def _reliability_curve(n: int, m1: int, m2: int, model: str):
    """``R(c)`` for ``c = 1..n`` contenders: exact table or an interpolant on a k-grid."""
    if n <= BARRING_EXACT_MAX:
        vals = np.array([_reliability(c, m1, m2, model) for c in range(1, n + 1)])
        return lambda c: vals[np.asarray(c, dtype=np.int64) - 1]
    nodes = np.unique(
        np.concatenate(
            [
                np.arange(1, 65),
                np.round(np.geomspace(64, n, 200)),
                np.round(np.linspace(1, n, 300)),
            ]
        ).astype(np.int64)
    )
    vals = np.array([_reliability(int(c), m1, m2, model) for c in nodes])
    interp = PchipInterpolator(nodes.astype(float), vals)
    return lambda c: np.clip(interp(np.asarray(c, dtype=float)), 0.0, 1.0)


def _barred_reliability(n: int, q: float, m1: int, m2: int, model: str) -> float:
    if q <= 0.0:
        return _reliability(n, m1, m2, model)
    if q >= 1.0:
        return 0.0
    curve = _reliability_curve(n, m1, m2, model)
    trials, admit = n - 1, 1.0 - q
    if n <= BARRING_EXACT_MAX:
        k = np.arange(0, n)
    else:
        mean = trials * admit
        sd = math.sqrt(trials * admit * q)
        k = np.arange(max(0, math.floor(mean - 6 * sd)), min(trials, math.ceil(mean + 6 * sd)) + 1)
    # the tagged device contends with the k admitted others
    weights = binom.pmf(k, trials, admit)
    return float(admit * np.dot(weights, curve(k + 1)))


def reliability_with_barring(n: int, q: float, space: ContentionSpace, model: str = "exact") -> float:
    """Reliability when each device independently joins the serving phase with probability ``1 - q``.

    The binomial mixture is summed exactly up to 2000 devices; above that the
    sum is truncated at six standard deviations and the reliability curve is
    interpolated between deterministic grid points.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    q = check_probability(q, "q")
    return _barred_reliability(int(n), q, space.m1, space.m2, _check_model(model))


def _argmax_first(values) -> int:
    return int(np.argmax(np.asarray(values)))


def optimal_barring(n: int, space: ContentionSpace, model: str = "exact") -> float:
    """Barring probability maximising :func:`reliability_with_barring`.

    Coarse grid with step 1e-2, then a 1e-4 grid over the neighbouring
    coarse cells. Ties go to the smaller ``q``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    model = _check_model(model)
    m1, m2 = space.m1, space.m2

    def rq(q: float) -> float:
        return _barred_reliability(int(n), q, m1, m2, model)

    coarse = np.round(np.arange(0, 101) * 0.01, 10)
    best = coarse[_argmax_first([rq(q) for q in coarse])]
    fine = np.round(np.arange(round((best - 0.01) * 1e4), round((best + 0.01) * 1e4) + 1) * 1e-4, 10)
    fine = fine[(fine >= 0) & (fine <= 1)]
    return float(fine[_argmax_first([rq(q) for q in fine])])


def _minimal_plan(s_req: int | None = 2) -> ServingPlan:
    return ServingPlan(2, 1, 0.0, 1.0, s_req)


def _capped_plan(n: int, s: int, j: int, model: str, s_req: int | None) -> ServingPlan:
    if s == 1:
        space = ContentionSpace(1, 1, j)
        q = optimal_barring(n, space, model)
        return ServingPlan(1, 1, q, _barred_reliability(n, q, space.m1, space.m2, model), s_req)
    # alternate split and barring: the split is tuned to the expected admitted population
    s1, q, seen = _best_split(n, s, j, model, None)[0], 0.0, set()
    while s1 not in seen:
        seen.add(s1)
        q = optimal_barring(n, ContentionSpace(s1, s, j), model)
        admitted = 1 + int(round((n - 1) * (1.0 - q)))
        s1 = _best_split(admitted, s, j, model, None)[0]
    space = ContentionSpace(s1, s, j)
    q = optimal_barring(n, space, model)
    return ServingPlan(s, s1, q, _barred_reliability(n, q, space.m1, space.m2, model), s_req)


def dimension_single(n_hat: int, budget: FrameBudget, j: int, *, model: str = "exact") -> ServingPlan:
    """Serving-phase size and barring for one traffic class.

    If the required size fits in ``L - 1`` RAOs it is used without barring;
    otherwise the phase is capped at ``L - 1`` RAOs and the barring
    probability maximising reliability is announced.
    """
    model = _check_model(model)
    if n_hat <= 0:
        return _minimal_plan()
    req = required_raos(n_hat, budget.r_req, j, model=model)
    if req.s <= budget.L - 1:
        return ServingPlan(req.s, req.s1, 0.0, req.reliability, req.s)
    return _capped_plan(int(n_hat), budget.L - 1, j, model, req.s)


def dimension_two_class(
    n_hat_1: int,
    n_hat_2: int,
    r1: float,
    r2: float,
    L: int,
    j: int,
    *,
    model: str = "exact",
) -> TwoClassPlan:
    """Share ``L - 2`` serving RAOs between a priority class (1) and a best-effort class (2).

    Regime 1: both requirements fit. Regime 2: class 1 fits, class 2 gets the
    remainder with barring. Regime 3: class 1 alone overflows the frame, so it
    takes every serving RAO with barring and class 2 is fully barred.
    """
    model = _check_model(model)
    check_positive_int(L, "L", minimum=3)
    cap = L - 2
    req1 = required_raos(n_hat_1, r1, j, model=model) if n_hat_1 > 0 else Requirement(2, 1, 1.0)
    req2 = required_raos(n_hat_2, r2, j, model=model) if n_hat_2 > 0 else Requirement(2, 1, 1.0)

    def unbarred(req: Requirement) -> ServingPlan:
        return ServingPlan(req.s, req.s1, 0.0, req.reliability, req.s)

    if req1.s + req2.s <= cap:
        return TwoClassPlan(unbarred(req1), unbarred(req2), 1)
    if req1.s < cap:
        s2 = cap - req1.s
        if n_hat_2 > 0:
            plan2 = _capped_plan(int(n_hat_2), s2, j, model, req2.s)
        else:
            plan2 = ServingPlan(s2, max(1, s2 // 2), 0.0, 1.0, req2.s)
        return TwoClassPlan(unbarred(req1), plan2, 2)
    plan1 = _capped_plan(int(n_hat_1), cap, j, model, req1.s)
    return TwoClassPlan(plan1, ServingPlan(0, 0, 1.0, 0.0, req2.s), 3)


class ServingPhaseDimensioner(BaseEstimator):
    """Maps device-count estimates to serving plans.

    ``predict`` takes one estimate per row. A single column is dimensioned
    with the one-class rule and returns columns ``(s, s1, q)``; two columns
    ``(n_hat_1, n_hat_2)`` use the two-class rule and return
    ``(s_1, s1_1, q_1, s_2, s1_2, q_2)``.
    """

    def __init__(self, frame_raos: int = 400, r_req: float = 0.99, r_req_2: float | None = None,
                 n_preambles: int = 54, model: str = "exact"):
        self.frame_raos = frame_raos
        self.r_req = r_req
        self.r_req_2 = r_req_2
        self.n_preambles = n_preambles
        self.model = model

    def fit(self, X=None, y=None):
        check_positive_int(self.frame_raos, "frame_raos", minimum=3)
        check_probability(self.r_req, "r_req", open_low=True, open_high=True)
        if self.r_req_2 is not None:
            check_probability(self.r_req_2, "r_req_2", open_low=True, open_high=True)
        check_positive_int(self.n_preambles, "n_preambles")
        _check_model(self.model)
        self.budget_ = FrameBudget(self.frame_raos, 1.0, self.r_req)
        return self

    def predict_plans(self, X) -> list:
        check_is_fitted(self, "budget_")
        X = np.asarray(X)
        if X.ndim == 2 and X.shape[1] == 2:
            counts = np.column_stack([check_counts(X[:, 0]), check_counts(X[:, 1])])
            r2 = self.r_req if self.r_req_2 is None else self.r_req_2
            return [
                dimension_two_class(int(a), int(b), self.r_req, r2, self.frame_raos, self.n_preambles, model=self.model)
                for a, b in counts
            ]
        return [
            dimension_single(int(n), self.budget_, self.n_preambles, model=self.model)
            for n in check_counts(X)
        ]

    def predict(self, X) -> np.ndarray:
        plans = self.predict_plans(X)
        if plans and isinstance(plans[0], TwoClassPlan):
            return np.array([[p.plan1.s, p.plan1.s1, p.plan1.q, p.plan2.s, p.plan2.s1, p.plan2.q] for p in plans])
        return np.array([[p.s, p.s1, p.q] for p in plans]).reshape(-1, 3)
