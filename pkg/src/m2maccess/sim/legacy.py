"""Legacy LTE access reservation procedure, with optional dynamic RAO allocation."""

from __future__ import annotations

from collections import defaultdict

import numpy as np

from ..traffic import TC1, ArrivalSchedule, TrafficScenario
from .events import EventKind, EventQueue
from .outcome import FAILURE, SUCCESS, SimOutcome
from .params import ArpParams, RaoSchedule

__all__ = ["run_arp", "run_legacy_dynamic", "scenario_deadlines", "to_ms"]

_NO_DEADLINE = np.iinfo(np.int64).max // 4


def to_ms(times_s) -> np.ndarray:
    """Continuous arrival times (s) to the first whole subframe at or after them."""
    return np.ceil(np.round(np.asarray(times_s, dtype=float) * 1000.0, 6)).astype(np.int64)


class _Escalation:
    """Lazy dynamic-allocation state: escalated until ``calm_raos`` RAOs pass without overload."""

    def __init__(self, schedule: RaoSchedule):
        self.schedule = schedule
        self.last_overload: int | None = None

    def active(self, t: int) -> bool:
        if not self.schedule.dynamic or self.last_overload is None:
            return False
        calm = self.schedule.count_between(self.last_overload, t, escalated=True)
        return calm < self.schedule.calm_raos

    def observe(self, t: int, busy: int, collided: int) -> None:
        if self.schedule.dynamic and busy and collided / busy > self.schedule.collision_threshold:
            self.last_overload = t


def run_arp(
    contenders,
    schedule: RaoSchedule,
    params: ArpParams,
    rng: np.random.Generator,
    *,
    deadlines_ms=None,
    retransmissions: bool = True,
    spread: int = 1,
    detect_collisions: bool = True,
    horizon_ms: int | None = None,
    trace: list | None = None,
) -> SimOutcome:
    """Event-driven run of the four-message handshake.

    ``contenders`` is either a device count (all arriving at t = 0) or an
    :class:`ArrivalSchedule`. A device's first preamble goes to one of the next
    ``spread`` RAOs, picked uniformly. Singleton preambles get a RAR and
    complete after the MSG3/MSG4 exchange. Collided devices learn of it when no
    RAR arrives (or, with ``detect_collisions=False``, when the contention
    timer expires after a colliding MSG3), back off uniformly in
    ``[0, backoff]`` and retry until ``max_retransmissions`` is used up or the
    deadline can no longer be met. Events after ``horizon_ms`` are not run, so
    affected devices stay pending.
    """
    if isinstance(contenders, ArrivalSchedule):
        arrival = to_ms(contenders.times)
        classes = contenders.classes.copy()
    else:
        n = int(contenders)
        if n < 0:
            raise ValueError(f"contender count must be >= 0, got {n}")
        arrival = np.zeros(n, dtype=np.int64)
        classes = np.full(n, TC1, dtype=np.int8)
    n = arrival.size
    if spread < 1:
        raise ValueError(f"spread must be >= 1, got {spread}")
    deadline = (
        np.full(n, _NO_DEADLINE, dtype=np.int64)
        if deadlines_ms is None
        else np.asarray(deadlines_ms, dtype=np.int64).copy()
    )
    if deadline.shape != (n,):
        raise ValueError("deadlines_ms must have one entry per contender")

    complete = np.full(n, -1, dtype=np.int64)
    status = np.zeros(n, dtype=np.int8)
    tx = np.zeros(n, dtype=np.int32)
    max_tx = params.max_retransmissions + 1 if retransmissions else 1
    J = params.preambles_per_rao
    fail_after = (
        params.collision_feedback_ms
        if detect_collisions
        else params.msg3_offset + params.contention_timer_ms
    )

    q = EventQueue(trace)
    esc = _Escalation(schedule)
    members: dict[int, list[int]] = defaultdict(list)
    busy_raos = 0
    singles_total = 0

    for d in np.lexsort((np.arange(n), arrival)):
        q.push(int(arrival[d]), EventKind.ARRIVAL, int(d))

    def designate(d: int, now: int, first: bool) -> None:
        skip = int(rng.integers(spread)) if first and spread > 1 else 0
        r = schedule.next_rao(now, esc.active(now), skip)
        if r + params.msg4_offset > deadline[d]:
            q.push(now, EventKind.FAILURE, d)
            return
        if r not in members:
            q.push(r, EventKind.RAO, -1)
        members[r].append(d)

    while q:
        ev = q.pop()
        if horizon_ms is not None and ev.time > horizon_ms:
            break
        d = ev.device
        if ev.kind is EventKind.ARRIVAL:
            designate(d, ev.time, True)
        elif ev.kind is EventKind.READY:
            designate(d, ev.time, False)
        elif ev.kind is EventKind.RAO:
            devs = np.asarray(members.pop(ev.time), dtype=np.int64)
            tx[devs] += 1
            picks = rng.integers(J, size=devs.size)
            occ = np.bincount(picks, minlength=J)
            busy_raos += 1
            esc.observe(ev.time, int(np.count_nonzero(occ)), int(np.count_nonzero(occ > 1)))
            single = occ[picks] == 1
            singles_total += int(single.sum())
            for dev in devs[single]:
                q.push(ev.time + params.rar_offset, EventKind.RAR, int(dev))
            collided = devs[~single]
            if not collided.size:
                continue
            backoff = rng.integers(0, params.backoff_ms + 1, size=collided.size)
            for dev, b in zip(collided, backoff):
                dev = int(dev)
                if tx[dev] >= max_tx:
                    q.push(ev.time + fail_after, EventKind.FAILURE, dev)
                else:
                    q.push(ev.time + fail_after + int(b), EventKind.READY, dev)
        elif ev.kind is EventKind.RAR:
            q.push(ev.time + params.ue_processing_ms, EventKind.MSG3, d)
        elif ev.kind is EventKind.MSG3:
            q.push(ev.time + 1 + params.enb_processing_ms, EventKind.MSG4, d)
        elif ev.kind is EventKind.MSG4:
            complete[d] = ev.time
            status[d] = SUCCESS if ev.time <= deadline[d] else FAILURE
        elif ev.kind is EventKind.FAILURE:
            status[d] = FAILURE

    return SimOutcome(
        classes=classes,
        arrival_ms=arrival,
        deadline_ms=deadline,
        complete_ms=np.where(status == SUCCESS, complete, -1),
        status=status,
        preamble_tx=tx,
        barred=np.zeros(n, dtype=np.int32),
        n_preambles=J,
        busy_raos=busy_raos,
        successful_preambles=singles_total,
        trace=trace,
    )


def scenario_deadlines(scenario: TrafficScenario, arrivals: ArrivalSchedule) -> np.ndarray:
    arrival = to_ms(arrivals.times)
    tau_ms = np.where(
        arrivals.classes == TC1,
        int(round(scenario.tau1 * 1000)),
        int(round(scenario.tau2 * 1000)),
    )
    return arrival + tau_ms


def run_legacy_dynamic(
    scenario: TrafficScenario,
    params: ArpParams,
    rng: np.random.Generator,
    *,
    arrivals: ArrivalSchedule | None = None,
    dynamic: bool = True,
    base_raos_per_frame: int = 2,
    collision_threshold: float = 0.5,
    calm_raos: int = 10,
    horizon_ms: int | None = None,
) -> SimOutcome:
    """Legacy access for both classes alike, with ideal reactive RAO escalation.

    The base allocation has ``base_raos_per_frame`` RAOs per LTE frame; on
    overload it jumps to ``max_raos_per_lte_frame`` at once. A device counts as
    successful only if it completes within its class latency budget.
    Pass ``arrivals`` to reuse a schedule drawn elsewhere (paired comparisons).
    """
    if arrivals is None:
        arrivals = scenario.generate(rng)
    base = RaoSchedule.legacy(params, base_raos_per_frame, dynamic)
    schedule = RaoSchedule(base.subframes, base.escalated_subframes, collision_threshold, calm_raos)
    return run_arp(
        arrivals,
        schedule,
        params,
        rng,
        deadlines_ms=scenario_deadlines(scenario, arrivals),
        horizon_ms=horizon_ms,
    )
