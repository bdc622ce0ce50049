"""Scenario orchestration: estimator sweeps, scheme comparisons, dimensioning tables.

Every (grid point, replication) cell draws its own 32-bit seed from the
master generator in a fixed order before any work starts, so the output does
not depend on how cells are dispatched. Within a comparison cell the arrival
schedule is drawn once and fed to both schemes.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..dimensioning import FrameBudget, dimension_single, dimension_two_class
from ..estimator import estimate, simulate_estimation_rao
from ..sim import SimOutcome, run_legacy_dynamic, run_proposed
from ..traffic import TC1, TC2, AlarmBurst, PeriodicProcess, TrafficScenario
from .config import ScenarioConfig
from .results import ResultRow

__all__ = [
    "DIMENSIONING_COLUMNS",
    "DimensioningRow",
    "comparison_scenario",
    "run_estimator_sweep",
    "run_reliability_comparison",
    "run_custom",
    "run_dimensioning_table",
    "run_scenario",
]

log = logging.getLogger(__name__)
NAN = float("nan")


def _master(config: ScenarioConfig, rng) -> np.random.Generator:
    if rng is None:
        return np.random.default_rng(config.seed)
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def run_estimator_sweep(config: ScenarioConfig, rng=None) -> list[ResultRow]:
    """One row per (grid point, replication): a fresh estimation RAO and its estimate."""
    master = _master(config, rng)
    rows = []
    seeds = master.integers(0, 2**32, size=(len(config.grid), config.replications), dtype=np.uint64)
    for gi, n in enumerate(config.grid):
        for rep in range(config.replications):
            seed = int(seeds[gi, rep])
            obs = simulate_estimation_rao(n, config.estimator, np.random.default_rng(seed))
            n_hat = estimate(obs, config.estimator).n_hat
            rows.append(ResultRow(config.scenario_id, TC1, n, 0, 0, "estimator", rep,
                                  NAN, NAN, NAN, NAN, float(n_hat), seed))
        log.info("estimator sweep N=%d done", n)
    return rows


def comparison_scenario(config: ScenarioConfig, n1: int, tau1: float) -> TrafficScenario:
    """TC1 burst ending on the boundary of the first access frame, plus Poisson TC2 reports."""
    frame = tau1 / 2
    t0 = frame - config.activation_window
    periodic = PeriodicProcess(config.n2, config.reporting_interval) if config.n2 > 0 else None
    return TrafficScenario(
        burst=AlarmBurst(n1, config.activation_window, config.beta_a, config.beta_b),
        periodic=periodic,
        t0=t0,
        horizon=frame,
        tau1=tau1,
        tau2=config.tau2,
    )


def _burst_frame_stats(out: SimOutcome, cls: int) -> tuple[float, float]:
    """Barring and estimate of the frame with the most contenders of ``cls``."""
    best = None
    for f in out.frames:
        rec = f.classes.get(cls)
        if rec is not None and (best is None or rec.contenders > best.contenders):
            best = rec
    if best is None:
        return NAN, NAN
    return float(best.q), float(best.n_hat)


def _rows_for(out: SimOutcome, config, scheme, n1, L, rep, seed) -> list[ResultRow]:
    rows = []
    classes = (TC1, TC2) if config.n2 > 0 else (TC1,)
    for cls in classes:
        if scheme == "proposed":
            q, n_hat = _burst_frame_stats(out, cls)
        else:
            q, n_hat = NAN, NAN
        rows.append(ResultRow(
            config.scenario_id, cls, n1, config.n2, L, scheme, rep,
            out.reliability(cls), out.mean_delay_ms(cls), out.delay_percentile(99, cls),
            q, n_hat, seed,
        ))
    return rows


def _comparison_cell(args) -> list[ResultRow]:
    config, n1, tau1, L, rep, seed = args
    scenario = comparison_scenario(config, n1, tau1)
    arrivals_ss, legacy_ss, proposed_ss = np.random.SeedSequence(seed).spawn(3)
    arrivals = scenario.generate(np.random.default_rng(arrivals_ss))
    rows = []
    if "legacy" in config.schemes:
        out = run_legacy_dynamic(
            scenario, config.arp, np.random.default_rng(legacy_ss), arrivals=arrivals,
            base_raos_per_frame=config.base_raos_per_frame,
            collision_threshold=config.collision_threshold, calm_raos=config.calm_raos,
        )
        rows += _rows_for(out, config, "legacy", n1, L, rep, seed)
    if "proposed" in config.schemes:
        budget = FrameBudget(L, tau1, config.r_req_1)
        out = run_proposed(
            scenario, budget, config.arp, config.estimator, np.random.default_rng(proposed_ss),
            arrivals=arrivals, r_req_2=config.r_req_2,
            oracle_estimates=config.oracle_estimates, model=config.model,
        )
        rows += _rows_for(out, config, "proposed", n1, L, rep, seed)
    return rows


def run_reliability_comparison(config: ScenarioConfig, rng=None) -> list[ResultRow]:
    """Both schemes on paired arrival schedules across the N1 grid and every L."""
    master = _master(config, rng)
    grid = [(tau, L, n1) for tau, L in zip(config.tau1, config.L_values) for n1 in config.n1]
    seeds = master.integers(0, 2**32, size=(len(grid), config.replications), dtype=np.uint64)
    tasks = [
        (config, n1, tau, L, rep, int(seeds[i, rep]))
        for i, (tau, L, n1) in enumerate(grid)
        for rep in range(config.replications)
    ]
    rows: list[ResultRow] = []
    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for chunk in pool.map(_comparison_cell, tasks):
                rows.extend(chunk)
    else:
        for task in tasks:
            rows.extend(_comparison_cell(task))
            log.debug("cell N1=%d L=%d rep=%d done", task[1], task[3], task[4])
    return rows


def run_custom(config: ScenarioConfig, rng=None) -> list[ResultRow]:
    """A user-defined scenario: same grid and pairing as the comparison, schemes as configured."""
    return run_reliability_comparison(config, rng)


@dataclass(frozen=True)
class DimensioningRow:
    L: int
    n_hat_1: int
    n_hat_2: int
    regime: int | None
    s_1: int
    s1_1: int
    q_1: float
    r_1: float
    s_2: int
    s1_2: int
    q_2: float
    r_2: float


DIMENSIONING_COLUMNS = (
    "L", "n_hat_1", "n_hat_2", "regime", "s_1", "s1_1", "q_1", "R_1", "s_2", "s1_2", "q_2", "R_2",
)


def run_dimensioning_table(config: ScenarioConfig, rng=None) -> list[DimensioningRow]:
    """Serving plans for every (L, n1) pair; two-class when ``n2 > 0``. No simulation."""
    j = config.estimator.n_preambles
    rows = []
    for tau, L in zip(config.tau1, config.L_values):
        for n1 in config.n1:
            if config.n2 > 0:
                two = dimension_two_class(n1, config.n2, config.r_req_1, config.r_req_2, L, j, model=config.model)
                a, b = two.plan1, two.plan2
                rows.append(DimensioningRow(L, n1, config.n2, two.regime, a.s, a.s1, a.q,
                                            a.predicted_reliability, b.s, b.s1, b.q, b.predicted_reliability))
            else:
                a = dimension_single(n1, FrameBudget(L, tau, config.r_req_1), j, model=config.model)
                rows.append(DimensioningRow(L, n1, 0, None, a.s, a.s1, a.q, a.predicted_reliability,
                                            0, 0, NAN, NAN))
    return rows


def run_scenario(config: ScenarioConfig, rng=None):
    runners = {
        "estimator-sweep": run_estimator_sweep,
        "reliability-comparison": run_reliability_comparison,
        "custom": run_custom,
        "dimensioning-table": run_dimensioning_table,
    }
    return runners[config.kind](config, rng)
