"""Balls-into-bins statistics for one slotted-ALOHA contention frame.

``n`` devices pick uniformly among ``m`` contention resources (RAO x preamble
pairs). A device succeeds when it is alone on its resource; ``N_S`` counts
successes and ``K = n - N_S`` counts collided devices.

Two evaluation routes are provided:

* the singleton pmf by inclusion-exclusion in exact integer arithmetic (the
  alternating sum cancels catastrophically in floating point), with a seeded
  Monte Carlo fallback for large ``n``;
* moments of the form ``E[x**K]`` and ``E[K x**(K-1)]`` through a
  generating-function expansion whose terms are all positive, which stays
  accurate in floating point for any ``n`` and costs ``O(min(n, m))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

__all__ = [
    "OccupancyPmf",
    "no_singleton_count",
    "success_counts_exact",
    "success_pmf_exact",
    "success_pmf",
    "collision_pmf",
    "collision_pgf",
    "collision_pgf_derivative",
    "all_singleton_probability",
    "EXACT_MAX_DEVICES",
]

#: Largest device count for which :func:`success_pmf` uses exact arithmetic.
EXACT_MAX_DEVICES = 500


@dataclass(frozen=True)
class OccupancyPmf:
    """Probability vector indexed by count, with the method that produced it."""

    pmf: np.ndarray
    method: str
    replications: int | None = None

    def __getitem__(self, k):
        return self.pmf[k]

    def __len__(self) -> int:
        return len(self.pmf)

    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.pmf)), self.pmf))


def no_singleton_count(u: int, v: int) -> int:
    """Number of ways to drop ``v`` labelled balls into ``u`` bins leaving no bin with exactly one ball."""
    if v == 0:
        return 1
    if u == 0:
        return 0
    total = 0
    # term_t = C(u, t) * v!/(v-t)! ; built incrementally to avoid recomputation
    term = 1
    for t in range(0, min(u, v) + 1):
        if t > 0:
            term = term * (u - t + 1) * (v - t + 1) // t
        contrib = term * (u - t) ** (v - t)
        total += -contrib if t & 1 else contrib
    return total


@lru_cache(maxsize=256)
def success_counts_exact(n: int, m: int) -> tuple[int, ...]:
    """Number of the ``m**n`` placements that leave exactly ``s`` singletons, for ``s = 0..n``."""
    if n < 0 or m < 1:
        raise ValueError(f"need n >= 0 and m >= 1, got n={n}, m={m}")
    counts = []
    for s in range(n + 1):
        if s > m:
            counts.append(0)
            continue
        ways = math.comb(m, s) * math.perm(n, s) * no_singleton_count(m - s, n - s)
        counts.append(ways)
    return tuple(counts)


def success_pmf_exact(n: int, m: int) -> list[Fraction]:
    total = m**n
    return [Fraction(c, total) for c in success_counts_exact(n, m)]


def _success_pmf_mc(n: int, m: int, replications: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    hist = np.zeros(n + 1, dtype=np.int64)
    chunk = max(1, min(replications, 2_000_000 // max(n, 1)))
    done = 0
    while done < replications:
        size = min(chunk, replications - done)
        picks = rng.integers(0, m, size=(size, n))
        # offset each replication into its own block of m bins
        flat = (picks + (np.arange(size)[:, None] * m)).ravel()
        occ = np.bincount(flat, minlength=size * m).reshape(size, m)
        hist += np.bincount((occ == 1).sum(axis=1), minlength=n + 1)
        done += size
    return hist / replications


def success_pmf(
    n: int,
    m: int,
    *,
    exact_max: int = EXACT_MAX_DEVICES,
    replications: int = 100_000,
    seed: int = 0,
) -> OccupancyPmf:
    """Distribution of the number of successful devices ``N_S``.

    Exact for ``n <= exact_max``; otherwise estimated from ``replications``
    seeded Monte Carlo throws.
    """
    if n < 0 or m < 1:
        raise ValueError(f"need n >= 0 and m >= 1, got n={n}, m={m}")
    if n <= exact_max:
        total = m**n
        pmf = np.array([c / total for c in success_counts_exact(n, m)], dtype=float)
        return OccupancyPmf(pmf, "exact")
    return OccupancyPmf(_success_pmf_mc(n, m, replications, seed), "monte-carlo", replications)


def collision_pmf(n: int, m: int, **kwargs) -> OccupancyPmf:
    """Distribution of the number of collided devices, ``Pr[N_C = k] = Pr[N_S = n - k]``."""
    s = success_pmf(n, m, **kwargs)
    return OccupancyPmf(s.pmf[::-1].copy(), s.method, s.replications)


def _log_terms(n: int, m: int, x: float) -> tuple[np.ndarray, np.ndarray]:
    # E[x**K] = m**-n * sum_s C(m,s) n!/(n-s)! (1-x)**s (x(m-s))**(n-s)
    s = np.arange(0, min(n, m) + 1, dtype=float)
    rest = n - s
    with np.errstate(divide="ignore", invalid="ignore"):
        log_free = np.where(rest > 0, rest * (math.log(x) + np.log(m - s)), 0.0)
    log_t = (
        gammaln(m + 1) - gammaln(s + 1) - gammaln(m - s + 1)
        + gammaln(n + 1) - gammaln(rest + 1)
        + s * math.log1p(-x)
        + log_free
        - n * math.log(m)
    )
    return s, log_t


def collision_pgf(n: int, m: int, x: float) -> float:
    """``E[x**K]`` for ``0 <= x <= 1``, where ``K`` is the number of collided devices."""
    if n == 0 or x >= 1:
        return 1.0
    if x <= 0:
        return all_singleton_probability(n, m)
    _, log_t = _log_terms(n, m, x)
    return float(np.exp(logsumexp(log_t)))


def collision_pgf_derivative(n: int, m: int, x: float) -> float:
    """``E[K x**(K-1)]``: expected number of collided devices weighted by ``x**(K-1)``."""
    if n < 2:
        return 0.0
    if x <= 0:
        # only K = 1 contributes at x = 0, and one collided device is impossible
        return 0.0
    if x >= 1:
        return n * (1.0 - (1.0 - 1.0 / m) ** (n - 1))
    s, log_t = _log_terms(n, m, x)
    rest = n - s
    with np.errstate(divide="ignore"):
        up = logsumexp(log_t + np.log(rest) - math.log(x))
        down = logsumexp(log_t + np.log(s) - math.log1p(-x))
    return max(math.exp(up) - math.exp(down), 0.0)


def all_singleton_probability(n: int, m: int) -> float:
    """``Pr[K = 0]``: every device lands on a distinct resource."""
    if n > m:
        return 0.0
    return math.exp(gammaln(m + 1) - gammaln(m - n + 1) - n * math.log(m))
