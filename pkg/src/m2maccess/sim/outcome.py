"""Per-device simulation records and their aggregates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["PENDING", "SUCCESS", "FAILURE", "SimOutcome", "ClassFrameRecord", "FrameRecord"]

PENDING, SUCCESS, FAILURE = 0, 1, 2


@dataclass
class SimOutcome:
    """Result of one simulation run.

    Per-device arrays are aligned by position. ``complete_ms`` is -1 unless
    the device succeeded. ``barred`` counts the access frames in which the
    device was barred (always 0 for the legacy scheme).
    """

    classes: np.ndarray
    arrival_ms: np.ndarray
    deadline_ms: np.ndarray
    complete_ms: np.ndarray
    status: np.ndarray
    preamble_tx: np.ndarray
    barred: np.ndarray
    n_preambles: int = 54
    busy_raos: int = 0
    successful_preambles: int = 0
    frames: list = field(default_factory=list)
    trace: list | None = None

    def __post_init__(self):
        n = len(self.classes)
        for name in ("arrival_ms", "deadline_ms", "complete_ms", "status", "preamble_tx", "barred"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has length {len(getattr(self, name))}, expected {n}")

    def __len__(self) -> int:
        return len(self.classes)

    def _mask(self, cls: int | None) -> np.ndarray:
        return np.ones(len(self), bool) if cls is None else self.classes == cls

    def count(self, status: int, cls: int | None = None) -> int:
        return int(np.sum((self.status == status) & self._mask(cls)))

    def arrivals(self, cls: int | None = None) -> int:
        return int(self._mask(cls).sum())

    def reliability(self, cls: int | None = None) -> float:
        """Successes over arrivals; NaN when the class had no arrivals."""
        total = self.arrivals(cls)
        return self.count(SUCCESS, cls) / total if total else float("nan")

    def delays_ms(self, cls: int | None = None) -> np.ndarray:
        ok = (self.status == SUCCESS) & self._mask(cls)
        return (self.complete_ms[ok] - self.arrival_ms[ok]).astype(float)

    def delay_percentile(self, q: float, cls: int | None = None) -> float:
        d = self.delays_ms(cls)
        return float(np.percentile(d, q)) if d.size else float("nan")

    def mean_delay_ms(self, cls: int | None = None) -> float:
        d = self.delays_ms(cls)
        return float(d.mean()) if d.size else float("nan")

    @property
    def rao_utilization(self) -> float:
        """Fraction of preambles in busy RAOs that carried exactly one device."""
        slots = self.busy_raos * self.n_preambles
        return self.successful_preambles / slots if slots else 0.0

    def summary(self) -> dict:
        out = {"arrivals": len(self), "rao_utilization": self.rao_utilization}
        for cls in np.unique(self.classes):
            c = int(cls)
            out[c] = {
                "arrivals": self.arrivals(c),
                "success": self.count(SUCCESS, c),
                "failure": self.count(FAILURE, c),
                "pending": self.count(PENDING, c),
                "reliability": self.reliability(c),
                "delay_p50_ms": self.delay_percentile(50, c),
                "delay_p99_ms": self.delay_percentile(99, c),
            }
        return out


@dataclass(frozen=True)
class ClassFrameRecord:
    contenders: int
    n_hat: int
    n_dimensioned: int
    s: int
    s1: int
    q: float
    admitted: int
    successes: int
    transmissions: int
    max_tx_per_device: int


@dataclass(frozen=True)
class FrameRecord:
    index: int
    start_ms: int
    sib: object
    regime: int | None
    classes: dict
