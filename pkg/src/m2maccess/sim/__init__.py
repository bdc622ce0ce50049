"""Discrete-event simulation of legacy LTE access and of the proposed access frame."""

from .events import Event, EventKind, EventQueue
from .legacy import run_arp, run_legacy_dynamic, scenario_deadlines, to_ms
from .outcome import FAILURE, PENDING, SUCCESS, ClassFrameRecord, FrameRecord, SimOutcome
from .params import ArpParams, RaoSchedule, SibMessage, raos_for_delay, rao_subframes
from .proposed import FrameLayout, layout_serving_raos, run_proposed

__all__ = [
    "ArpParams",
    "ClassFrameRecord",
    "Event",
    "EventKind",
    "EventQueue",
    "FAILURE",
    "FrameLayout",
    "FrameRecord",
    "PENDING",
    "RaoSchedule",
    "SUCCESS",
    "SibMessage",
    "SimOutcome",
    "layout_serving_raos",
    "rao_subframes",
    "raos_for_delay",
    "run_arp",
    "run_legacy_dynamic",
    "run_proposed",
    "scenario_deadlines",
    "to_ms",
]
