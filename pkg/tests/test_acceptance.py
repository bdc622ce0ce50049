"""Acceptance criteria, each at its stated tolerance; every test records one PASS/FAIL line."""

import itertools
import math
import subprocess
import sys
from collections import Counter
from fractions import Fraction

import numpy as np

from m2maccess.dimensioning import (
    ContentionSpace,
    FrameBudget,
    dimension_single,
    dimension_two_class,
    optimal_barring,
    optimal_split,
    reliability,
    reliability_with_barring,
    required_raos,
)
from m2maccess.estimator import EstimatorConfig, estimate, simulate_estimation_rao
from m2maccess.experiments import ScenarioConfig, run_reliability_comparison
from m2maccess.occupancy import success_pmf, success_pmf_exact
from m2maccess.traffic import TC1

J = 54


def test_criterion_1_estimator_fidelity(verdict):
    cfg = EstimatorConfig(p0=0.001, alpha=1.056, n_preambles=J, n_max=60000)
    rng = np.random.default_rng(20240601)
    bias = {}
    for n in (100, 1000, 10000, 30000):
        vals = [estimate(simulate_estimation_rao(n, cfg, rng), cfg).n_hat for _ in range(500)]
        bias[n] = (np.mean(vals) - n) / n
    ok = all(abs(b) <= 0.10 for b in bias.values())
    verdict(1, "estimator mean within 10%", ok, ", ".join(f"N={n}: {b:+.3%}" for n, b in bias.items()))
    assert ok


def _enumerated(n, m):
    hist = Counter()
    for placement in itertools.product(range(m), repeat=n):
        occ = Counter(placement)
        hist[sum(1 for v in occ.values() if v == 1)] += 1
    return [Fraction(hist[s], m**n) for s in range(n + 1)]


def test_criterion_2_occupancy_exactness(verdict):
    worst_enum = 0.0
    for n in range(0, 7):
        for m in range(1, 5):
            oracle = _enumerated(n, m)
            assert success_pmf_exact(n, m) == oracle
            err = max(abs(Fraction(float(p)) - q) for p, q in zip(success_pmf(n, m).pmf, oracle))
            worst_enum = max(worst_enum, float(err))
    worst_sum = 0.0
    for n in range(0, 51):
        for m in range(1, 201):
            worst_sum = max(worst_sum, abs(float(success_pmf(n, m).pmf.sum()) - 1.0))
    ok = worst_enum <= 1e-12 and worst_sum <= 1e-9
    verdict(2, "occupancy pmf exact", ok, f"max enumeration error {worst_enum:.1e}, max |sum-1| {worst_sum:.1e}")
    assert ok


def _two_frame_fractions(n, space, reps, rng, chunk=2000):
    """Per-replication fraction of the n devices served within the two frames."""
    m1, m2 = space.m1, space.m2
    out = np.empty(reps)
    done = 0
    while done < reps:
        c = min(chunk, reps - done)
        rows = np.arange(c)[:, None]
        pick = rng.integers(m1, size=(c, n)) + rows * m1
        occ = np.bincount(pick.ravel(), minlength=c * m1)
        ok1 = occ[pick] == 1
        wins = ok1.sum(axis=1)
        if m2:
            r_idx = np.broadcast_to(rows, (c, n))[~ok1]
            pick2 = rng.integers(m2, size=r_idx.size) + r_idx * m2
            occ2 = np.bincount(pick2, minlength=c * m2)
            wins = wins + np.bincount(r_idx[occ2[pick2] == 1], minlength=c)
        out[done:done + c] = wins / n
        done += c
    return out


def test_criterion_3_analytic_vs_simulation(verdict):
    rng = np.random.default_rng(7)
    details, ok = [], True
    for n, s1, s, j in [(10, 2, 4, 4), (100, 5, 12, 54), (1000, 20, 60, 54)]:
        space = ContentionSpace(s1, s, j)
        frac = _two_frame_fractions(n, space, 100_000, rng)
        se = frac.std(ddof=1) / math.sqrt(frac.size)
        r = reliability(n, space)
        z = (frac.mean() - r) / se
        ok &= abs(z) <= 3
        details.append(f"({n},{s1},{s},{j}) R={r:.5f} MC={frac.mean():.5f} z={z:+.2f}")
    verdict(3, "reliability matches Monte Carlo within 3 SE", ok, "; ".join(details))
    assert ok


def test_criterion_4_barring(verdict):
    ident_ok = True
    for n in (1, 2, 3, 7, 50, 400, 1999, 2000, 2001, 5000, 30000):
        for s1, s in ((1, 2), (3, 8), (20, 60), (150, 399)):
            space = ContentionSpace(s1, s, J)
            ident_ok &= reliability_with_barring(n, 0.0, space) == reliability(n, space)
            ident_ok &= reliability_with_barring(n, 1.0, space) == 0.0
    grid = np.linspace(0.0, 1.0, 1001)
    cells = [(2, ContentionSpace(1, 2, 1)), (40, ContentionSpace(1, 2, 4)), (300, ContentionSpace(2, 5, J)),
             (3000, ContentionSpace(10, 30, J)), (10000, ContentionSpace(optimal_split(10000, 399, J), 399, J))]
    gaps = []
    for n, space in cells:
        scan = np.array([reliability_with_barring(n, q, space) for q in grid])
        gaps.append(abs(optimal_barring(n, space) - grid[int(np.argmax(scan))]))
    grid_ok = all(g <= 1e-3 + 1e-12 for g in gaps)
    ok = ident_ok and grid_ok
    verdict(4, "barring identities and optimum", ok,
            f"identities {'exact' if ident_ok else 'violated'}; |q - q_grid| = " + ", ".join(f"{g:.1e}" for g in gaps))
    assert ok


def _boundary_counts(L, r_req=0.99):
    """Largest n whose requirement fits in L-1 RAOs, and the first n that does not."""
    lo, hi = 1, 2
    while required_raos(hi, r_req, J).s <= L - 1:
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if required_raos(mid, r_req, J).s <= L - 1:
            lo = mid
        else:
            hi = mid
    return lo, hi


def test_criterion_5_regimes(verdict):
    # two classes: constructed inputs for each regime plus the S1_req = L-2 edge
    L = 400
    two_ok = True
    regimes = {}
    n1_edge = _boundary_counts(L - 1)[0]  # S1_req <= L-2
    cases = [(5, 5), (100, 10000), (100, 30000), (30000, 10000), (n1_edge, 1000), (n1_edge, 0), (0, 0)]
    for n1, n2 in cases:
        plan = dimension_two_class(n1, n2, 0.99, 0.99, L, J)
        regimes[(n1, n2)] = plan.regime
        two_ok &= plan.plan1.s + plan.plan2.s <= L - 2
        if plan.regime == 1:
            two_ok &= plan.plan1.q == 0 and plan.plan2.q == 0
        elif plan.regime == 2:
            two_ok &= plan.plan1.q == 0 and plan.plan1.s + plan.plan2.s == L - 2
        else:
            two_ok &= plan.plan2.q == 1.0 and plan.plan2.s == 0 and plan.plan1.s == L - 2
    two_ok &= regimes[(5, 5)] == 1 and regimes[(100, 10000)] == 2 and regimes[(30000, 10000)] == 3
    two_ok &= dimension_two_class(100, 30000, 0.99, 0.99, L, J).plan2.q > 0

    # one class: Q = 0 exactly when S_req fits in L-1
    violations = []
    for L1 in (10, 50, 400, 4000):
        fit, over = _boundary_counts(L1)
        probes = sorted({1, fit, over, over + 1, 2 * over, 30000})
        for n in probes:
            s_req = required_raos(n, 0.99, J).s
            plan = dimension_single(n, FrameBudget(L1, 1.0, 0.99), J)
            if (plan.q == 0.0) != (s_req <= L1 - 1):
                violations.append(f"L={L1} n={n} S_req={s_req} q={plan.q:.4f}")
    single_ok = not violations
    ok = two_ok and single_ok
    detail = f"two-class regimes {'ok' if two_ok else 'violated'}; single-class iff "
    detail += "holds" if single_ok else f"fails on {len(violations)} inputs, e.g. " + "; ".join(violations[:3])
    verdict(5, "dimensioning regimes", ok, detail)
    assert two_ok, "two-class regime structure"
    assert single_ok, "Q = 0 iff S_req <= L-1: " + "; ".join(violations)


def test_criterion_6_headline_scale(verdict):
    cfg = ScenarioConfig(kind="reliability-comparison", scenario_id="headline", n1=(30000,), n2=10000,
                         tau1=(10.0,), replications=50, seed=2024, schemes=("proposed",))
    assert cfg.L_values == (4000,)
    rows = [r for r in run_reliability_comparison(cfg) if r.cls == TC1]
    rel = np.array([r.reliability for r in rows])
    ok = len(rows) == 50 and rel.mean() >= 0.985
    verdict(6, "TC1 reliability at N1=30000, L=4000", ok,
            f"mean {rel.mean():.5f} over {len(rows)} replications (min {rel.min():.5f})")
    assert ok


def test_criterion_7_legacy_collapse(verdict):
    cfg = ScenarioConfig(kind="reliability-comparison", scenario_id="collapse", n1=(5000,), n2=10000,
                         tau1=(1.0,), replications=10, seed=77)
    rows = [r for r in run_reliability_comparison(cfg) if r.cls == TC1]
    pairs = {}
    for r in rows:
        pairs.setdefault(r.replication, {})[r.scheme] = r.reliability
    legacy = np.array([p["legacy"] for p in pairs.values()])
    proposed = np.array([p["proposed"] for p in pairs.values()])
    ok = bool(np.all(legacy < 0.9) and np.all(proposed >= 0.99) and np.all(proposed > legacy))
    verdict(7, "legacy collapses at N1=5000, proposed holds", ok,
            f"legacy max {legacy.max():.4f} mean {legacy.mean():.4f}; proposed min {proposed.min():.4f} "
            f"over {len(pairs)} paired seeds")
    assert ok


def test_criterion_8_determinism(verdict, tmp_path):
    config = tmp_path / "det.ini"
    config.write_text(
        "[scenario]\nkind = reliability-comparison\nreplications = 3\nseed = 5\n"
        "[traffic]\nn1 = 500, 3000\nn2 = 10000\n[frame]\ntau1 = 1\n"
    )
    sweep = tmp_path / "sweep.ini"
    sweep.write_text("[scenario]\nkind = estimator-sweep\nreplications = 50\nseed = 5\n[estimator]\ngrid = 100, 10000\n")
    same = []
    for cfg in (config, sweep):
        outputs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{cfg.stem}-{tag}.csv"
            subprocess.run([sys.executable, "-m", "m2maccess", "simulate", str(cfg), "-o", str(out)],
                           check=True, capture_output=True)
            outputs.append(out.read_bytes())
        same.append(outputs[0] == outputs[1] and len(outputs[0]) > 100)
    ok = all(same)
    verdict(8, "byte-identical reruns", ok, f"comparison {'identical' if same[0] else 'differs'}, "
                                            f"estimator sweep {'identical' if same[1] else 'differs'}")
    assert ok
