"""ARP timing parameters, RAO schedules and the broadcast control message.

All times are integer milliseconds (one LTE subframe).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ArpParams",
    "RaoSchedule",
    "SibMessage",
    "rao_subframes",
    "frame_raos",
    "raos_for_delay",
]

SUBFRAMES_PER_LTE_FRAME = 10
# spreading order so any count of RAOs is evenly placed within the LTE frame;
# subframes 0 and 5 come last because they carry the H2x RAOs
_SUBFRAME_ORDER = (1, 6, 3, 8, 2, 7, 4, 9, 0, 5)


def rao_subframes(count: int) -> tuple[int, ...]:
    if not 1 <= count <= SUBFRAMES_PER_LTE_FRAME:
        raise ValueError(f"RAOs per LTE frame must be in 1..10, got {count}")
    return tuple(sorted(_SUBFRAME_ORDER[:count]))


@dataclass(frozen=True)
class ArpParams:
    """Legacy LTE access parameters; defaults are the usual 20 MHz configuration."""

    preambles_per_rao: int = 54
    max_raos_per_lte_frame: int = 8
    max_retransmissions: int = 9
    msg2_window_ms: int = 5
    msg4_timer_ms: int = 24
    contention_timer_ms: int = 48
    backoff_ms: int = 20
    enb_processing_ms: int = 3
    ue_processing_ms: int = 3
    system_bandwidth: str = "20 MHz"

    def __post_init__(self):
        for name in (
            "preambles_per_rao",
            "max_raos_per_lte_frame",
            "msg2_window_ms",
            "msg4_timer_ms",
            "contention_timer_ms",
            "enb_processing_ms",
            "ue_processing_ms",
        ):
            if int(getattr(self, name)) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_retransmissions < 0 or self.backoff_ms < 0:
            raise ValueError("max_retransmissions and backoff_ms must be >= 0")
        rao_subframes(self.max_raos_per_lte_frame)

    # offsets from the preamble subframe
    @property
    def rar_offset(self) -> int:
        return 1 + self.enb_processing_ms

    @property
    def msg3_offset(self) -> int:
        return self.rar_offset + self.ue_processing_ms

    @property
    def msg4_offset(self) -> int:
        return self.msg3_offset + 1 + self.enb_processing_ms

    @property
    def collision_feedback_ms(self) -> int:
        """Time after a preamble at which a device without RAR knows it collided."""
        return 1 + self.enb_processing_ms + self.msg2_window_ms

    @property
    def observation_delay_ms(self) -> int:
        """Delay between the estimation RAO and the control broadcast."""
        return self.msg2_window_ms + self.enb_processing_ms


@dataclass(frozen=True)
class RaoSchedule:
    """Periodic RAO pattern, optionally with an escalated pattern for dynamic allocation.

    ``collision_threshold`` and ``calm_raos`` drive escalation: an RAO whose
    collided/busy preamble ratio exceeds the threshold escalates the density,
    and ``calm_raos`` RAOs without such an event fall back to the base pattern.
    """

    subframes: tuple[int, ...] = field(default_factory=lambda: rao_subframes(8))
    escalated_subframes: tuple[int, ...] | None = None
    collision_threshold: float = 0.5
    calm_raos: int = 10

    def __post_init__(self):
        for pat in (self.subframes, self.escalated_subframes):
            if pat is None:
                continue
            if not pat or len(set(pat)) != len(pat) or min(pat) < 0 or max(pat) >= SUBFRAMES_PER_LTE_FRAME:
                raise ValueError(f"invalid subframe pattern {pat}")
        object.__setattr__(self, "subframes", tuple(sorted(self.subframes)))
        if self.escalated_subframes is not None:
            object.__setattr__(self, "escalated_subframes", tuple(sorted(self.escalated_subframes)))

    @classmethod
    def legacy(cls, params: ArpParams, base_per_frame: int = 2, dynamic: bool = True) -> "RaoSchedule":
        escalated = rao_subframes(params.max_raos_per_lte_frame) if dynamic else None
        return cls(rao_subframes(base_per_frame), escalated)

    @classmethod
    def m2m(cls, params: ArpParams) -> "RaoSchedule":
        return cls(rao_subframes(params.max_raos_per_lte_frame))

    @property
    def dynamic(self) -> bool:
        return self.escalated_subframes is not None

    def pattern(self, escalated: bool = False) -> tuple[int, ...]:
        return self.escalated_subframes if escalated and self.dynamic else self.subframes

    def next_rao(self, t_ms: float, escalated: bool = False, skip: int = 0) -> int:
        """RAO time at or after ``t_ms``, advanced by ``skip`` further RAOs."""
        pat = self.pattern(escalated)
        t = math.ceil(t_ms)
        base, sub = divmod(t, SUBFRAMES_PER_LTE_FRAME)
        idx = next((i for i, s in enumerate(pat) if s >= sub), len(pat)) + skip
        frames, pos = divmod(idx, len(pat))
        return (base + frames) * SUBFRAMES_PER_LTE_FRAME + pat[pos]

    def count_between(self, start_ms: int, end_ms: int, escalated: bool = False) -> int:
        """Number of RAOs with ``start_ms < t < end_ms``."""
        if end_ms <= start_ms + 1:
            return 0
        return len(self.raos_in(start_ms + 1, end_ms, escalated))

    def raos_in(self, start_ms: int, end_ms: int, escalated: bool = False) -> np.ndarray:
        """RAO times in ``[start_ms, end_ms)``."""
        pat = np.asarray(self.pattern(escalated))
        f0 = start_ms // SUBFRAMES_PER_LTE_FRAME
        f1 = -(-end_ms // SUBFRAMES_PER_LTE_FRAME)
        times = (np.arange(f0, f1)[:, None] * SUBFRAMES_PER_LTE_FRAME + pat[None, :]).ravel()
        return times[(times >= start_ms) & (times < end_ms)]


def raos_for_delay(tau_s: float, params: ArpParams | None = None) -> int:
    """``L``: M2M RAOs available in an access frame of length ``tau/2``."""
    params = params or ArpParams()
    frame_ms = tau_s * 1000 / 2
    if abs(frame_ms - round(frame_ms)) > 1e-9:
        raise ValueError("tau/2 must be a whole number of milliseconds")
    return len(RaoSchedule.m2m(params).raos_in(0, int(round(frame_ms))))


def frame_raos(schedule: RaoSchedule, start_ms: int, duration_ms: int, limit: int | None = None) -> np.ndarray:
    times = schedule.raos_in(start_ms, start_ms + duration_ms)
    return times if limit is None else times[:limit]


@dataclass(frozen=True)
class SibMessage:
    """Control broadcast issued after the estimation RAO(s) of an access frame.

    ``classes`` maps a traffic class to its block: serving size ``s``, first
    frame ``s1``, barring ``q`` and the RAO subframes (ms) of both frames.
    """

    frame_index: int
    issued_ms: int
    next_estimation_ms: int
    p0: float
    alpha: float
    n_preambles: int
    classes: dict

    @property
    def serving_bitmap(self) -> tuple[int, ...]:
        times = []
        for block in self.classes.values():
            times.extend(block["frame1"])
            times.extend(block["frame2"])
        return tuple(sorted(times))
