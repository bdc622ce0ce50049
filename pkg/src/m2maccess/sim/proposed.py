"""Proposed access frame: estimation RAO(s), broadcast plan, two-frame serving phase.

Each access frame of length ``tau/2`` gates the devices that arrived since the
previous frame start, together with the backlog of barred or twice-collided
devices. Its first RAO (one per class when periodic traffic is present) runs
the geometric estimation; the control broadcast follows after
``observation_delay_ms``. Serving RAOs are the remaining M2M RAOs that lie
after the broadcast and early enough for collision feedback to reach devices
before the next frame's estimation RAO.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dimensioning import (
    FrameBudget,
    ServingPlan,
    dimension_single,
    dimension_two_class,
)
from ..estimator import EstimatorConfig, estimate, simulate_estimation_rao
from ..traffic import TC1, TC2, ArrivalSchedule, TrafficScenario
from .events import EventKind, EventQueue
from .legacy import scenario_deadlines, to_ms
from .outcome import FAILURE, SUCCESS, ClassFrameRecord, FrameRecord, SimOutcome
from .params import ArpParams, RaoSchedule, SibMessage

__all__ = ["FrameLayout", "layout_serving_raos", "run_proposed"]


@dataclass(frozen=True)
class FrameLayout:
    """RAO times (ms) of each class's first and second serving frame."""

    blocks: dict
    overflow: int

    def times(self, cls: int, frame: int) -> np.ndarray:
        return self.blocks.get((cls, frame), np.empty(0, dtype=np.int64))


def layout_serving_raos(candidates: np.ndarray, plans: dict, feedback_ms: int) -> FrameLayout:
    """First-fit placement of the serving blocks onto candidate RAO times.

    Blocks are placed in the order class-1 frame 1, class-2 frame 1, class-1
    frame 2, class-2 frame 2. A second frame only uses RAOs at least
    ``feedback_ms`` after the last RAO of the same class's first frame, so
    collided devices know they must retry. ``overflow`` counts RAOs that could
    not be placed.
    """
    cand = np.asarray(candidates, dtype=np.int64)
    used = np.zeros(cand.size, dtype=bool)
    blocks: dict = {}
    overflow = 0
    order = [(c, 1) for c in sorted(plans)] + [(c, 2) for c in sorted(plans)]
    for cls, frame in order:
        plan = plans[cls]
        size = plan.s1 if frame == 1 else plan.s - plan.s1
        if size <= 0:
            continue
        min_t = -1
        if frame == 2:
            first = blocks.get((cls, 1))
            min_t = (int(first[-1]) + feedback_ms) if first is not None and first.size else -1
        idx = np.flatnonzero(~used & (cand >= min_t))[:size]
        used[idx] = True
        blocks[(cls, frame)] = cand[idx]
        overflow += size - idx.size
    return FrameLayout(blocks, overflow)


def _dimension(n_hats: dict, cap: int, budget: FrameBudget, r_req_2: float, j: int, model: str):
    if len(n_hats) == 1:
        (cls, n_hat), = n_hats.items()
        plan = dimension_single(n_hat, FrameBudget(cap + 1, budget.tau, budget.r_req), j, model=model)
        return {cls: plan}, None
    two = dimension_two_class(n_hats[TC1], n_hats[TC2], budget.r_req, r_req_2, cap + 2, j, model=model)
    return {TC1: two.plan1, TC2: two.plan2}, two.regime


class _ProposedRun:
    def __init__(self, scenario, budget, params, est_cfg, rng, arrivals, r_req_2, oracle, model, max_frames,
                 trace, backlog_hint):
        self.scenario = scenario
        self.budget = budget
        self.params = params
        self.cfg = est_cfg
        self.rng = rng
        self.r_req_2 = budget.r_req if r_req_2 is None else r_req_2
        self.oracle = oracle
        self.model = model
        self.schedule = RaoSchedule.m2m(params)

        self.classes = arrivals.classes.copy()
        self.arrival = to_ms(arrivals.times)
        self.deadline = scenario_deadlines(scenario, arrivals)
        n = self.arrival.size
        self.complete = np.full(n, -1, dtype=np.int64)
        self.status = np.zeros(n, dtype=np.int8)
        self.tx = np.zeros(n, dtype=np.int32)
        self.barred = np.zeros(n, dtype=np.int32)
        self.class_set = (TC1, TC2) if scenario.periodic is not None else (TC1,)
        self.backlog_hint = backlog_hint
        self.hint = {c: 0 for c in self.class_set}

        frame_ms = budget.frame_duration * 1000
        if abs(frame_ms - round(frame_ms)) > 1e-9 or frame_ms < 20:
            raise ValueError("access frame must be a whole number of ms and at least 20 ms")
        self.D = int(round(frame_ms))
        last = int(self.arrival.max()) if n else 0
        # frame k admits arrivals in ((k-1)D, kD]
        self.slot = -(-self.arrival // self.D) if n else self.arrival
        self.slot = np.maximum(self.slot, 0)
        tail = int(max(self.deadline.max(), last)) if n else 0
        self.max_frames = max_frames if max_frames is not None else tail // self.D + 2
        self.backlog = np.empty(0, dtype=np.int64)
        self.frames: list[FrameRecord] = []
        self.busy_raos = 0
        self.singles = 0
        self.queue = EventQueue(trace)
        self._order = np.argsort(self.slot, kind="stable")
        self._bounds = np.searchsorted(self.slot[self._order], np.arange(self.max_frames + 1), side="left")

    def run(self) -> SimOutcome:
        self.queue.push(0, EventKind.FRAME_START, -1, 0)
        while self.queue:
            ev = self.queue.pop()
            if ev.kind is EventKind.FRAME_START:
                self._frame(ev.payload)
        return SimOutcome(
            classes=self.classes,
            arrival_ms=self.arrival,
            deadline_ms=self.deadline,
            complete_ms=np.where(self.status == SUCCESS, self.complete, -1),
            status=self.status,
            preamble_tx=self.tx,
            barred=self.barred,
            n_preambles=self.params.preambles_per_rao,
            busy_raos=self.busy_raos,
            successful_preambles=self.singles,
            frames=self.frames,
            trace=self.queue.trace,
        )

    def _contenders(self, k: int, T: int) -> np.ndarray:
        new = self._order[self._bounds[k]:self._bounds[k + 1]] if k < self.max_frames else np.empty(0, np.int64)
        pool = np.concatenate([self.backlog, new]).astype(np.int64)
        expired = pool[self.deadline[pool] <= T]
        self.status[expired] = FAILURE
        return np.sort(pool[self.deadline[pool] > T])

    def _frame(self, k: int) -> None:
        T = k * self.D
        pool = self._contenders(k, T)
        q, p = self.queue, self.params
        J = p.preambles_per_rao

        raos = self.schedule.raos_in(T, T + self.D)[: self.budget.L]
        n_est = len(self.class_set)
        est_raos = raos[:n_est]
        members = {c: pool[self.classes[pool] == c] for c in self.class_set}

        n_hats, raw = {}, {}
        for c, r in zip(self.class_set, est_raos):
            q.push(int(r), EventKind.ESTIMATION_RAO, -1, c)
            n_true = int(members[c].size)
            if self.oracle:
                raw[c] = n_hats[c] = n_true
            else:
                obs = simulate_estimation_rao(n_true, self.cfg, self.rng)
                raw[c] = int(estimate(obs, self.cfg).n_hat)
                n_hats[c] = max(raw[c], self.hint[c]) if self.backlog_hint else raw[c]

        sib_ms = int(est_raos[-1]) + p.observation_delay_ms
        next_est = self.schedule.next_rao(T + self.D)
        cand = raos[n_est:]
        cand = cand[(cand > sib_ms) & (cand + p.collision_feedback_ms <= next_est)]

        cap = int(cand.size)
        plans, regime, layout = {}, None, None
        while cap >= 1:
            plans, regime = _dimension(n_hats, cap, self.budget, self.r_req_2, J, self.model)
            layout = layout_serving_raos(cand, plans, p.collision_feedback_ms)
            if layout.overflow == 0:
                break
            cap -= layout.overflow
        if layout is None or layout.overflow:
            plans = {c: ServingPlan(0, 0, 1.0, 0.0) for c in self.class_set}
            layout = FrameLayout({}, 0)

        sib = SibMessage(
            frame_index=k,
            issued_ms=sib_ms,
            next_estimation_ms=int(next_est),
            p0=self.cfg.p0,
            alpha=self.cfg.alpha,
            n_preambles=J,
            classes={
                c: {
                    "s": plans[c].s,
                    "s1": plans[c].s1,
                    "q": plans[c].q,
                    "frame1": tuple(int(t) for t in layout.times(c, 1)),
                    "frame2": tuple(int(t) for t in layout.times(c, 2)),
                }
                for c in self.class_set
            },
        )
        q.push(sib_ms, EventKind.SIB, -1, k)

        records = {}
        leftovers = []
        for c in self.class_set:
            devs = members[c]
            plan = plans[c]
            f1, f2 = layout.times(c, 1), layout.times(c, 2)
            if plan.s == 0 or plan.q >= 1.0:
                admitted_mask = np.zeros(devs.size, dtype=bool)
            elif plan.q <= 0.0:
                admitted_mask = np.ones(devs.size, dtype=bool)
            else:
                admitted_mask = self.rng.random(devs.size) >= plan.q
            self.barred[devs[~admitted_mask]] += 1
            admitted = devs[admitted_mask]
            tx_before = self.tx[admitted].copy()

            won1, lost1, clash = self._contend(admitted, f1, c, 1)
            won2, lost2 = np.empty(0, np.int64), lost1
            if f2.size:
                won2, lost2, clash = self._contend(lost1, f2, c, 2)
            # what the eNodeB can infer about next frame's backlog: every collided
            # preamble of the last serving frame held at least two devices
            if plan.s == 0 or plan.q >= 1.0:
                self.hint[c] = n_hats[c]
            else:
                self.hint[c] = 2 * clash + int(round(plan.q * n_hats[c]))
            leftovers.append(devs[~admitted_mask])
            leftovers.append(lost2)
            frame_tx = self.tx[admitted] - tx_before
            records[c] = ClassFrameRecord(
                contenders=int(devs.size),
                n_hat=raw[c],
                n_dimensioned=n_hats[c],
                s=plan.s,
                s1=plan.s1,
                q=plan.q,
                admitted=int(admitted.size),
                successes=int(won1.size + won2.size),
                transmissions=int(frame_tx.sum()),
                max_tx_per_device=int(frame_tx.max()) if frame_tx.size else 0,
            )

        self.backlog = np.concatenate(leftovers).astype(np.int64) if leftovers else np.empty(0, np.int64)
        self.frames.append(FrameRecord(k, T, sib, regime, records))
        waiting = self._bounds[k + 1] < self.arrival.size if k < self.max_frames else False
        if (waiting or self.backlog.size) and k + 1 < self.max_frames:
            q.push(T + self.D, EventKind.FRAME_START, -1, k + 1)

    def _contend(self, devs: np.ndarray, times: np.ndarray, cls: int, frame: int):
        if devs.size == 0 or times.size == 0:
            return np.empty(0, np.int64), devs, 0
        J = self.params.preambles_per_rao
        self.queue.push(int(times[0]), EventKind.RAO, -1, (cls, frame))
        picks = self.rng.integers(times.size * J, size=devs.size)
        occ = np.bincount(picks, minlength=times.size * J)
        single = occ[picks] == 1
        self.tx[devs] += 1
        busy = np.unique(picks // J)
        self.busy_raos += int(busy.size)
        self.singles += int(single.sum())
        won = devs[single]
        done = times[picks[single] // J] + self.params.msg4_offset
        in_time = done <= self.deadline[won]
        self.complete[won] = done
        self.status[won[in_time]] = SUCCESS
        self.status[won[~in_time]] = FAILURE
        return won, devs[~single], int(np.count_nonzero(occ > 1))


def run_proposed(
    scenario: TrafficScenario,
    budget: FrameBudget,
    params: ArpParams,
    estimator_config: EstimatorConfig,
    rng: np.random.Generator,
    *,
    arrivals: ArrivalSchedule | None = None,
    r_req_2: float | None = None,
    oracle_estimates: bool = False,
    model: str = "exact",
    max_frames: int | None = None,
    trace: list | None = None,
    backlog_hint: bool = True,
) -> SimOutcome:
    """Simulate the estimation plus serving access frame.

    ``budget.tau`` fixes the frame length ``tau/2``; ``budget.L`` caps the
    M2M RAOs used per frame. With periodic traffic in the scenario the two
    classes are dimensioned jointly, class 2 with target ``r_req_2``
    (default: ``budget.r_req``). ``oracle_estimates`` replaces the
    estimation RAO with the true contender counts. With ``backlog_hint`` the
    estimate is floored by what the previous frame revealed about the
    backlog: two devices per collided preamble of the last serving frame plus
    the expected number of barred devices. Devices are counted as failed once
    their latency budget has expired.
    """
    if arrivals is None:
        arrivals = scenario.generate(rng)
    run = _ProposedRun(
        scenario, budget, params, estimator_config, rng, arrivals,
        r_req_2, oracle_estimates, model, max_frames, trace, backlog_hint,
    )
    return run.run()

