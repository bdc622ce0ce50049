import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from m2maccess.traffic import (
    TC1,
    TC2,
    AlarmBurst,
    ArrivalSchedule,
    PeriodicProcess,
    TrafficScenario,
    alarm_arrivals,
    gate_arrivals,
    periodic_arrivals,
)


def test_empty_generators():
    rng = np.random.default_rng(0)
    assert len(alarm_arrivals(AlarmBurst(0), 0.0, rng)) == 0
    assert len(periodic_arrivals(PeriodicProcess(0), 10.0, rng)) == 0


def test_alarm_offsets_follow_beta():
    burst = AlarmBurst(100_000, activation_window=2.0)
    sched = alarm_arrivals(burst, 5.0, np.random.default_rng(1))
    off = sched.times - 5.0
    assert off.min() >= 0 and off.max() <= 2.0
    sd = 2.0 * np.sqrt(3 * 4 / (7**2 * 8)) / np.sqrt(off.size)
    assert abs(off.mean() - 2.0 * 3 / 7) <= 3 * sd
    assert np.all(sched.classes == TC1)
    assert np.all(np.diff(sched.times) >= 0)


def test_periodic_count_is_poisson_mean():
    proc = PeriodicProcess(10_000, 60.0)
    rng = np.random.default_rng(2)
    counts = np.array([len(periodic_arrivals(proc, 3.0, rng)) for _ in range(400)])
    lam = proc.rate * 3.0
    assert abs(counts.mean() - lam) <= 3 * np.sqrt(lam / counts.size)


def test_periodic_interarrivals_are_exponential():
    proc = PeriodicProcess(6000, 60.0)
    sched = periodic_arrivals(proc, 100.0, np.random.default_rng(3))
    gaps = np.diff(sched.times)[:10_000]
    assert gaps.size >= 9_000
    assert stats.kstest(gaps, "expon", args=(0, 1 / proc.rate)).pvalue > 0.01
    assert np.all(sched.classes == TC2)


def test_gating_example():
    sched = ArrivalSchedule([0.1, 0.6, 1.1], [TC1] * 3, [0, 1, 2])
    batches = gate_arrivals(sched, [0.5, 1.0, 1.5])
    assert [b.tolist() for b in batches] == [[0], [1], [2]]


def test_gating_boundary_and_empty():
    sched = ArrivalSchedule([0.5, 1.0], [TC1, TC2], [0, 1])
    assert [b.tolist() for b in gate_arrivals(sched, [0.5, 1.0])] == [[0], [1]]
    assert all(b.size == 0 for b in gate_arrivals(ArrivalSchedule(), [0.5, 1.0]))
    with pytest.raises(ValueError):
        gate_arrivals(ArrivalSchedule([2.0], [TC1], [0]), [0.5, 1.0])


@given(st.lists(st.floats(0, 9.99, allow_nan=False), max_size=60), st.integers(1, 20))
def test_gating_conserves_and_never_early(times, frames):
    times = sorted(times)
    sched = ArrivalSchedule(times, [TC1] * len(times), list(range(len(times))))
    starts = np.linspace(10.0 / frames, 10.0, frames)
    batches = gate_arrivals(sched, starts)
    assert sum(b.size for b in batches) == len(times)
    for k, b in enumerate(batches):
        assert np.all(starts[k] >= sched.times[b])
        if k:
            assert np.all(sched.times[b] > starts[k - 1])


def test_scenario_reproducible_per_seed():
    sc = TrafficScenario(AlarmBurst(500, 0.2), PeriodicProcess(10_000), t0=0.3, horizon=0.5)
    a = sc.generate(np.random.default_rng(9))
    b = sc.generate(np.random.default_rng(9))
    np.testing.assert_array_equal(a.times, b.times)
    np.testing.assert_array_equal(a.classes, b.classes)
    assert a.of_class(TC1).times.size == 500
    assert np.all(a.of_class(TC2).times <= 0.5)
    assert sc.tau(TC1) == 1.0 and sc.tau(TC2) == 60.0


@pytest.mark.parametrize("bad", [lambda: AlarmBurst(-1), lambda: AlarmBurst(3, 0.0), lambda: PeriodicProcess(-2),
                                 lambda: ArrivalSchedule([1.0, 0.5], [1, 1], [0, 1])])
def test_invalid_inputs(bad):
    with pytest.raises(ValueError):
        bad()
