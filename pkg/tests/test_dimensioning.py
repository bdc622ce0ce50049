import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom
from sklearn.base import clone

from m2maccess.dimensioning import (
    ContentionSpace,
    FrameBudget,
    ServingPhaseDimensioner,
    ServingPlan,
    TwoClassPlan,
    dimension_single,
    dimension_two_class,
    optimal_barring,
    optimal_split,
    p1_success,
    p2_success,
    reliability,
    reliability_from_pmf,
    reliability_with_barring,
    required_raos,
)
from m2maccess.occupancy import success_pmf


def two_frame_mc(n, space, reps, rng):
    """Fraction of devices served by a first frame plus one retry frame, pooled over replications."""
    m1, m2 = space.m1, space.m2
    wins = 0
    for _ in range(reps):
        pick = rng.integers(m1, size=n)
        occ = np.bincount(pick, minlength=m1)
        ok = occ[pick] == 1
        wins += int(ok.sum())
        lost = int((~ok).sum())
        if lost and m2:
            pick2 = rng.integers(m2, size=lost)
            wins += int((np.bincount(pick2, minlength=m2)[pick2] == 1).sum())
    return wins / (reps * n)


def enumerate_reliability(n, space):
    """Exact tagged-device success probability over every joint choice in both frames."""
    m1, m2 = space.m1, space.m2
    total, ok = 0, 0
    for first in itertools.product(range(m1), repeat=n):
        lost = [d for d in range(n) if first.count(first[d]) > 1]
        seconds = itertools.product(range(m2), repeat=len(lost)) if m2 else [()]
        for second in seconds:
            weight = m2 ** (n - len(lost)) if m2 else 1
            total += weight
            if 0 not in lost:
                ok += weight
            elif m2 and second.count(second[lost.index(0)]) == 1:
                ok += weight
    return ok / total


def test_p1_examples():
    assert p1_success(1, ContentionSpace(3, 5, 7)) == 1.0
    assert p1_success(2, ContentionSpace(1, 1, 2)) == 0.5
    assert p1_success(3, ContentionSpace(2, 2, 1)) == 0.25


def test_p2_examples():
    assert p2_success(1, ContentionSpace(1, 3, 1)) == 0.0
    assert p2_success(2, ContentionSpace(1, 2, 1)) == 0.0
    assert p2_success(2, ContentionSpace(1, 3, 1)) == pytest.approx(0.5)


def test_reliability_examples():
    assert reliability(1, ContentionSpace(1, 2, 54)) == 1.0
    assert reliability(2, ContentionSpace(1, 2, 1)) == 0.0
    space = ContentionSpace(1, 2, 2)
    # the written mixture and the full path enumeration disagree on this cell
    assert reliability(2, space, model="mixture") == pytest.approx(0.625)
    assert enumerate_reliability(2, space) == pytest.approx(0.75)
    assert reliability(2, space) == pytest.approx(0.75)


@pytest.mark.parametrize("n,s1,s,j", [(2, 1, 2, 2), (3, 1, 2, 2), (3, 1, 3, 1), (4, 1, 2, 2), (3, 2, 3, 1), (2, 1, 1, 3)])
def test_exact_model_matches_enumeration(n, s1, s, j):
    space = ContentionSpace(s1, s, j)
    assert reliability(n, space) == pytest.approx(enumerate_reliability(n, space), abs=1e-12)


@pytest.mark.parametrize("n,s1,s,j", [(10, 2, 4, 4), (100, 5, 12, 54), (1000, 20, 60, 54)])
def test_reliability_matches_monte_carlo(n, s1, s, j):
    space = ContentionSpace(s1, s, j)
    reps = 100_000 if n <= 100 else 20_000
    est = two_frame_mc(n, space, reps, np.random.default_rng(n))
    r = reliability(n, space)
    se = np.sqrt(r * (1 - r) / reps)  # per-replication fractions are less noisy than this bound
    assert abs(est - r) <= 3 * se


@given(st.integers(1, 300), st.integers(1, 8), st.integers(0, 8), st.integers(1, 54))
@settings(max_examples=80, deadline=None)
def test_pmf_route_agrees(n, s1, extra, j):
    space = ContentionSpace(s1, s1 + extra, j)
    for model in ("exact", "mixture"):
        assert reliability_from_pmf(n, space, model) == pytest.approx(reliability(n, space, model), abs=1e-9)


@given(st.integers(1, 120), st.integers(1, 30))
def test_mean_singletons_equal_first_frame(n, m1):
    space = ContentionSpace(m1, m1, 1)
    assert success_pmf(n, m1).mean() / n == pytest.approx(p1_success(n, space), rel=1e-9, abs=1e-15)


@pytest.mark.parametrize("s1,s,j", [(1, 2, 4), (5, 12, 54), (20, 60, 54), (3, 3, 10)])
def test_reliability_nonincreasing_in_n(s1, s, j):
    space = ContentionSpace(s1, s, j)
    vals = [reliability(n, space) for n in range(1, 400)]
    assert np.all(np.diff(vals) <= 1e-12)


def test_barring_identities():
    for n in (1, 2, 3, 10, 150, 1999, 2500, 30000):
        space = ContentionSpace(max(1, n // 200), max(2, n // 100), 54)
        assert reliability_with_barring(n, 0.0, space) == reliability(n, space)
        assert reliability_with_barring(n, 1.0, space) == 0.0


def test_barring_three_term_expansion():
    space = ContentionSpace(1, 2, 2)
    q = 0.5
    expected = (1 - q) * sum(binom.pmf(k, 2, 1 - q) * reliability(k + 1, space) for k in range(3))
    assert reliability_with_barring(3, q, space) == pytest.approx(expected, abs=1e-12)


def _grid_argmax(n, space):
    grid = np.linspace(0, 1, 1001)
    vals = [reliability_with_barring(n, q, space) for q in grid]
    return grid[int(np.argmax(vals))], max(vals)


@pytest.mark.parametrize("n,s1,s,j", [(2, 1, 2, 1), (40, 1, 2, 4), (300, 2, 5, 54), (3000, 10, 30, 54), (10000, None, 399, 54)])
def test_optimal_barring_matches_dense_grid(n, s1, s, j):
    if s1 is None:
        s1 = optimal_split(n, s, j)
    space = ContentionSpace(s1, s, j)
    q_star, best = _grid_argmax(n, space)
    q = optimal_barring(n, space)
    assert abs(q - q_star) <= 1e-3 + 1e-9 or reliability_with_barring(n, q, space) >= best - 1e-12


def test_no_barring_when_uncongested():
    assert optimal_barring(20, ContentionSpace(5, 10, 54)) == 0.0


def test_optimal_split_examples():
    assert optimal_split(5, 2, 54) == 1
    scan = [reliability(2, ContentionSpace(a, 4, 1)) for a in (1, 2, 3)]
    assert optimal_split(2, 4, 1) == 1 + int(np.argmax(scan))
    best = optimal_split(1000, 40, 54, full_scan=True)
    r = reliability(1000, ContentionSpace(best, 40, 54))
    assert all(r >= reliability(1000, ContentionSpace(a, 40, 54)) for a in range(1, 40))


def test_golden_section_split_close_to_full_scan():
    n, s = 30000, 1000
    fast = optimal_split(n, s, 54)
    full = optimal_split(n, s, 54, full_scan=True)
    r_fast = reliability(n, ContentionSpace(fast, s, 54))
    r_full = reliability(n, ContentionSpace(full, s, 54))
    assert r_fast == pytest.approx(r_full, abs=1e-6)


def test_required_raos():
    assert required_raos(1, 0.99, 54).s == 2
    assert required_raos(2000, 0.99, 54).s >= required_raos(1000, 0.99, 54).s
    req = required_raos(100, 0.99, 54)
    assert req.reliability >= 0.99
    below = req.s - 1
    assert max(reliability(100, ContentionSpace(a, below, 54)) for a in range(1, below + 1)) < 0.99


def test_dimension_single_examples():
    budget = FrameBudget(400, 1.0, 0.99)
    for n in (0, 1):
        plan = dimension_single(n, budget, 54)
        assert (plan.s, plan.q) == (2, 0.0)
    plan = dimension_single(30000, budget, 54)
    assert plan.s == 399 and plan.q > 0
    assert required_raos(30000, 0.99, 54).s > 399


def test_dimension_single_boundary_is_unbarred():
    n = 1500
    req = required_raos(n, 0.99, 54)
    plan = dimension_single(n, FrameBudget(req.s + 1, 1.0, 0.99), 54)
    assert plan.q == 0.0 and plan.s == req.s


def test_dimension_two_class_regimes():
    tiny = dimension_two_class(5, 5, 0.99, 0.99, 400, 54)
    assert tiny.regime == 1 and tiny.plan1.q == tiny.plan2.q == 0.0
    assert tiny.plan1.s == required_raos(5, 0.99, 54).s
    mid = dimension_two_class(100, 10000, 0.99, 0.99, 400, 54)
    assert mid.regime == 2 and mid.plan1.q == 0.0
    assert mid.plan1.s + mid.plan2.s == 398
    mid = dimension_two_class(100, 30000, 0.99, 0.99, 400, 54)
    assert mid.regime == 2 and mid.plan1.q == 0.0 and mid.plan2.q > 0
    assert mid.plan1.s + mid.plan2.s == 398
    huge = dimension_two_class(30000, 10000, 0.99, 0.99, 400, 54)
    assert huge.regime == 3 and huge.plan2.q == 1.0 and huge.plan2.s == 0 and huge.plan1.s == 398


@given(st.integers(0, 5000), st.integers(0, 20000), st.sampled_from([10, 60, 400]))
@settings(max_examples=15, deadline=None)
def test_two_class_never_exceeds_frame(n1, n2, L):
    plan = dimension_two_class(n1, n2, 0.99, 0.9, L, 54)
    assert plan.plan1.s + plan.plan2.s <= L - 2
    if plan.regime == 3:
        assert plan.plan2.q == 1.0 and plan.plan2.s == 0


def test_dimensioner_estimator_api():
    dim = ServingPhaseDimensioner(frame_raos=400)
    assert clone(dim).get_params() == dim.get_params()
    out = dim.fit().predict([1, 30000])
    assert out.shape == (2, 3)
    assert tuple(out[0]) == (2, 1, 0.0)
    two = dim.predict([[100, 10000]])
    assert two.shape == (1, 6)
    plans = dim.predict_plans([[100, 10000]])
    assert isinstance(plans[0], TwoClassPlan)
    with pytest.raises(ValueError):
        dim.predict([-1])
    assert isinstance(dim.predict_plans([3])[0], ServingPlan)
