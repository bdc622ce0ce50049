"""Arrival processes for the two M2M traffic classes and frame gating."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TC1",
    "TC2",
    "AlarmBurst",
    "PeriodicProcess",
    "ArrivalSchedule",
    "TrafficScenario",
    "alarm_arrivals",
    "periodic_arrivals",
    "gate_arrivals",
]

TC1 = 1  # alarm reporting, priority class
TC2 = 2  # periodic reporting


@dataclass(frozen=True)
class AlarmBurst:
    """``n_devices`` activations spread over ``activation_window`` seconds by a Beta(a, b) law."""

    n_devices: int
    activation_window: float = 10.0
    beta_a: float = 3.0
    beta_b: float = 4.0

    def __post_init__(self):
        if self.n_devices < 0:
            raise ValueError(f"n_devices must be >= 0, got {self.n_devices}")
        if not self.activation_window > 0:
            raise ValueError(f"activation_window must be > 0, got {self.activation_window}")
        if not (self.beta_a > 0 and self.beta_b > 0):
            raise ValueError("Beta shape parameters must be > 0")


@dataclass(frozen=True)
class PeriodicProcess:
    """Aggregate Poisson reporting of ``n_devices`` meters, one report per ``reporting_interval`` seconds."""

    n_devices: int
    reporting_interval: float = 60.0

    def __post_init__(self):
        if self.n_devices < 0:
            raise ValueError(f"n_devices must be >= 0, got {self.n_devices}")
        if not self.reporting_interval > 0:
            raise ValueError(f"reporting_interval must be > 0, got {self.reporting_interval}")

    @property
    def rate(self) -> float:
        return self.n_devices / self.reporting_interval


@dataclass(frozen=True)
class ArrivalSchedule:
    """Time-ordered arrivals; ``times`` in seconds, ``classes`` in {TC1, TC2}."""

    times: np.ndarray = field(default_factory=lambda: np.empty(0))
    classes: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int8))
    device_ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        classes = np.asarray(self.classes, dtype=np.int8)
        ids = np.asarray(self.device_ids, dtype=np.int64)
        if not (times.shape == classes.shape == ids.shape) or times.ndim != 1:
            raise ValueError("times, classes and device_ids must be 1-D arrays of equal length")
        if times.size and np.any(np.diff(times) < 0):
            raise ValueError("arrival times must be nondecreasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "device_ids", ids)

    def __len__(self) -> int:
        return self.times.size

    @classmethod
    def from_unsorted(cls, times, classes, device_ids) -> "ArrivalSchedule":
        times = np.asarray(times, dtype=float)
        classes = np.asarray(classes, dtype=np.int8)
        device_ids = np.asarray(device_ids, dtype=np.int64)
        order = np.lexsort((device_ids, classes, times))
        return cls(times[order], classes[order], device_ids[order])

    def merge(self, other: "ArrivalSchedule") -> "ArrivalSchedule":
        return ArrivalSchedule.from_unsorted(
            np.concatenate([self.times, other.times]),
            np.concatenate([self.classes, other.classes]),
            np.concatenate([self.device_ids, other.device_ids]),
        )

    def of_class(self, cls: int) -> "ArrivalSchedule":
        mask = self.classes == cls
        return ArrivalSchedule(self.times[mask], self.classes[mask], self.device_ids[mask])


def alarm_arrivals(burst: AlarmBurst, t0: float, rng: np.random.Generator) -> ArrivalSchedule:
    offsets = rng.beta(burst.beta_a, burst.beta_b, size=burst.n_devices)
    times = t0 + burst.activation_window * offsets
    return ArrivalSchedule.from_unsorted(
        times, np.full(burst.n_devices, TC1), np.arange(burst.n_devices)
    )


def periodic_arrivals(proc: PeriodicProcess, horizon: float, rng: np.random.Generator) -> ArrivalSchedule:
    """Homogeneous Poisson arrivals at rate ``proc.rate`` on ``[0, horizon]``.

    Every event is treated as a distinct logical device.
    """
    if not horizon > 0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    count = rng.poisson(proc.rate * horizon) if proc.n_devices else 0
    times = np.sort(rng.uniform(0.0, horizon, size=count))
    return ArrivalSchedule(times, np.full(count, TC2), np.arange(count))


def gate_arrivals(schedule: ArrivalSchedule, frame_starts) -> list[np.ndarray]:
    """Indices of the arrivals admitted at each frame start.

    An arrival joins the first frame starting at or after it (an arrival
    exactly on a start joins that frame); arrivals before the first start
    join the first frame. Arrivals after the last start raise ``ValueError``.
    """
    starts = np.asarray(frame_starts, dtype=float)
    if starts.ndim != 1 or starts.size == 0:
        raise ValueError("frame_starts must be a non-empty 1-D sequence")
    if np.any(np.diff(starts) <= 0):
        raise ValueError("frame_starts must be strictly increasing")
    slot = np.searchsorted(starts, schedule.times, side="left")
    if np.any(slot >= starts.size):
        raise ValueError("arrivals after the last frame start cannot be gated")
    order = np.argsort(slot, kind="stable")
    bounds = np.searchsorted(slot[order], np.arange(starts.size + 1), side="left")
    return [order[bounds[i]:bounds[i + 1]] for i in range(starts.size)]


@dataclass(frozen=True)
class TrafficScenario:
    """Alarm burst plus optional periodic background with per-class latency budgets (seconds).

    The burst starts at ``t0``; periodic arrivals cover ``[0, horizon]``.
    """

    burst: AlarmBurst
    periodic: PeriodicProcess | None = None
    t0: float = 0.0
    horizon: float | None = None
    tau1: float = 1.0
    tau2: float = 60.0

    def __post_init__(self):
        if not (self.tau1 > 0 and self.tau2 > 0):
            raise ValueError("latency budgets must be > 0")
        if self.t0 < 0:
            raise ValueError("t0 must be >= 0")

    @property
    def arrival_horizon(self) -> float:
        if self.horizon is not None:
            return self.horizon
        return self.t0 + self.burst.activation_window

    def tau(self, cls: int) -> float:
        return self.tau1 if cls == TC1 else self.tau2

    def generate(self, rng: np.random.Generator) -> ArrivalSchedule:
        sched = alarm_arrivals(self.burst, self.t0, rng)
        if self.periodic is not None and self.periodic.n_devices > 0:
            sched = sched.merge(periodic_arrivals(self.periodic, self.arrival_horizon, rng))
        return sched
