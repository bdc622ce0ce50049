"""Result rows and their CSV serialization."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

__all__ = [
    "ResultRow",
    "RESULT_COLUMNS",
    "AGGREGATE_COLUMNS",
    "ESTIMATOR_COLUMNS",
    "aggregate",
    "aggregate_path",
    "emit_results",
    "emit_table",
    "estimator_summary",
    "format_value",
    "read_results",
]


@dataclass(frozen=True)
class ResultRow:
    """One (replication, class, scheme) cell. Missing quantities are NaN and serialize as empty."""

    scenario_id: str
    cls: int
    N1: int
    N2: int
    L: int
    scheme: str
    replication: int
    reliability: float
    mean_delay_ms: float
    p99_delay_ms: float
    barring_q: float
    n_hat: float
    seed: int


RESULT_COLUMNS = tuple("class" if f.name == "cls" else f.name for f in fields(ResultRow))
AGGREGATE_COLUMNS = (
    "scenario", "scheme", "class", "N1", "L",
    "reliability_mean", "reliability_ci95", "delay_p50_ms", "delay_p99_ms",
)
ESTIMATOR_COLUMNS = ("scenario", "N", "replications", "n_hat_mean", "n_hat_std", "relative_bias")


def format_value(v) -> str:
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return ""
        return format(float(v), ".10g")
    return str(v)


def _sort_key(row: ResultRow):
    return (row.scenario_id, row.scheme, row.N1, row.replication, row.cls, row.L)


def _write(path: Path, header, records) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for rec in records:
                writer.writerow([format_value(v) for v in rec])
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write results to {path}: {exc.strerror}") from exc


def aggregate_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.stem + ".aggregate" + (p.suffix or ".csv"))


def aggregate(rows) -> list[tuple]:
    """Per (scenario, scheme, class, N1, L) cell: mean reliability, normal 95% half-width, delay medians.

    ``delay_p50_ms`` is the median over replications of the mean delay and
    ``delay_p99_ms`` the median of the per-replication 99th percentiles.
    """
    cells = defaultdict(list)
    for r in rows:
        if r.scheme == "estimator":
            continue
        cells[(r.scenario_id, r.scheme, r.cls, r.N1, r.L)].append(r)
    out = []
    for key in sorted(cells):
        group = cells[key]
        rel = np.array([r.reliability for r in group], dtype=float)
        rel = rel[~np.isnan(rel)]
        mean = float(rel.mean()) if rel.size else float("nan")
        ci = float(1.96 * rel.std(ddof=1) / math.sqrt(rel.size)) if rel.size > 1 else float("nan")
        mean_d = np.array([r.mean_delay_ms for r in group], dtype=float)
        p99 = np.array([r.p99_delay_ms for r in group], dtype=float)
        p50 = float(np.median(mean_d[~np.isnan(mean_d)])) if np.any(~np.isnan(mean_d)) else float("nan")
        p99m = float(np.median(p99[~np.isnan(p99)])) if np.any(~np.isnan(p99)) else float("nan")
        out.append((*key, mean, ci, p50, p99m))
    return out


def estimator_summary(rows) -> list[tuple]:
    cells = defaultdict(list)
    for r in rows:
        if r.scheme == "estimator":
            cells[(r.scenario_id, r.N1)].append(r.n_hat)
    out = []
    for (sid, n), vals in sorted(cells.items()):
        v = np.asarray(vals, dtype=float)
        std = float(v.std(ddof=1)) if v.size > 1 else float("nan")
        out.append((sid, n, v.size, float(v.mean()), std, float((v.mean() - n) / n)))
    return out


def emit_results(rows, path) -> Path:
    """Write the sorted rows to ``path`` and the per-cell aggregates next to it.

    Returns the aggregate file path. Estimator sweeps get an estimator
    summary (``n_hat`` mean, spread and relative bias per grid point) as
    their aggregate instead.
    """
    rows = sorted(rows, key=_sort_key)
    path = Path(path)
    _write(path, RESULT_COLUMNS, (astuple(r) for r in rows))
    agg = aggregate_path(path)
    if rows and all(r.scheme == "estimator" for r in rows):
        _write(agg, ESTIMATOR_COLUMNS, estimator_summary(rows))
    else:
        _write(agg, AGGREGATE_COLUMNS, aggregate(rows))
    return agg


def emit_table(header, records, path) -> Path:
    """Write arbitrary records under ``header`` with the same formatting as the results file."""
    path = Path(path)
    _write(path, header, records)
    return path


def read_results(path) -> list[dict]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))

