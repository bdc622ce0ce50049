"""Scenario configuration files.

A configuration is an INI file read with :mod:`configparser`. Every key is
optional except ``[scenario] kind``; see the README for the full schema. List
values are comma separated.

Example::

    [scenario]
    schema_version = 1
    kind = reliability-comparison
    replications = 20

    [traffic]
    n1 = 1000, 5000
    n2 = 10000

    [frame]
    tau1 = 1, 10
"""

from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path

from ..estimator import EstimatorConfig
from ..sim.params import ArpParams, raos_for_delay

__all__ = ["ConfigError", "ScenarioConfig", "KINDS", "SCHEMA_VERSION", "load_config", "parse_config"]

SCHEMA_VERSION = 1
KINDS = ("estimator-sweep", "reliability-comparison", "dimensioning-table", "custom")
SCHEMES = ("legacy", "proposed")
_DEFAULT_GRID = (100, 300, 1000, 3000, 10000, 30000)


class ConfigError(ValueError):
    """Parse or validation failure; ``line`` is the 1-based line of the offending entry when known."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
        self.path = path
        self.line = line


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    scenario_id: str = ""
    replications: int = 100
    seed: int = 0
    output: str = "results.csv"
    workers: int = 1
    # traffic
    n1: tuple[int, ...] = _DEFAULT_GRID
    n2: int = 10000
    activation_window: float = 0.1
    beta_a: float = 3.0
    beta_b: float = 4.0
    reporting_interval: float = 60.0
    # frame
    tau1: tuple[float, ...] = (1.0, 5.0, 10.0)
    tau2: float = 60.0
    r_req_1: float = 0.99
    r_req_2: float = 0.99
    model: str = "exact"
    schemes: tuple[str, ...] = SCHEMES
    oracle_estimates: bool = False
    # estimator
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    grid: tuple[int, ...] = _DEFAULT_GRID
    # access procedure
    arp: ArpParams = field(default_factory=ArpParams)
    base_raos_per_frame: int = 2
    collision_threshold: float = 0.5
    calm_raos: int = 10

    @property
    def L_values(self) -> tuple[int, ...]:
        return tuple(raos_for_delay(t, self.arp) for t in self.tau1)

    def with_overrides(self, **changes) -> "ScenarioConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **changes) if changes else self


def _ints(text: str) -> tuple[int, ...]:
    out = []
    for v in _split(text):
        x = float(v)
        if not x.is_integer():
            raise ValueError(f"{v!r} is not an integer")
        out.append(int(x))
    return tuple(out)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in _split(text))


def _split(text: str) -> list[str]:
    items = [v.strip() for v in text.split(",") if v.strip()]
    if not items:
        raise ValueError("empty list")
    return items


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _int(text: str) -> int:
    (v,) = _ints(text)
    return v


def _float(text: str) -> float:
    (v,) = _floats(text)
    return v


# section -> key -> (field name, converter)
_SCHEMA = {
    "scenario": {
        "schema_version": (None, _int),
        "kind": ("kind", str.strip),
        "id": ("scenario_id", str.strip),
        "replications": ("replications", _int),
        "seed": ("seed", _int),
        "output": ("output", str.strip),
        "workers": ("workers", _int),
    },
    "traffic": {
        "n1": ("n1", _ints),
        "n2": ("n2", _int),
        "activation_window": ("activation_window", _float),
        "beta_a": ("beta_a", _float),
        "beta_b": ("beta_b", _float),
        "reporting_interval": ("reporting_interval", _float),
    },
    "frame": {
        "tau1": ("tau1", _floats),
        "tau2": ("tau2", _float),
        "r_req_1": ("r_req_1", _float),
        "r_req_2": ("r_req_2", _float),
        "model": ("model", str.strip),
        "schemes": ("schemes", lambda t: tuple(_split(t))),
        "oracle_estimates": ("oracle_estimates", _bool),
    },
    "estimator": {
        "p0": ("p0", _float),
        "alpha": ("alpha", _float),
        "n_preambles": ("n_preambles", _int),
        "n_max": ("n_max", _int),
        "grid": ("grid", _ints),
    },
    "arp": {f.name: (f.name, str.strip if f.name == "system_bandwidth" else _int)
            for f in dataclasses.fields(ArpParams)},
    "legacy": {
        "base_raos_per_frame": ("base_raos_per_frame", _int),
        "collision_threshold": ("collision_threshold", _float),
        "calm_raos": ("calm_raos", _int),
    },
}

_ESTIMATOR_KEYS = {"p0", "alpha", "n_preambles", "n_max"}
_ARP_KEYS = {f.name for f in dataclasses.fields(ArpParams)}


def _line_index(text: str) -> dict:
    """Map (section, key) to the 1-based line where the key is defined."""
    index, section = {}, None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.fullmatch(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
            index.setdefault((section, None), no)
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            index[(section, m.group(1).strip().lower())] = no
    return index


def parse_config(text: str, path: str | None = None) -> ScenarioConfig:
    """Parse and validate configuration text."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=path or "<string>")
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        raise ConfigError(f"parse error: {exc.message.splitlines()[0]}", path, line) from exc

    lines = _line_index(text)
    values: dict = {}
    est: dict = {}
    arp: dict = {}
    for section in parser.sections():
        sec = section.lower()
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", path, lines.get((sec, None)))
        for key, raw in parser.items(section):
            if key not in _SCHEMA[sec]:
                raise ConfigError(f"unknown key {sec}.{key}", path, lines.get((sec, key)))
            name, conv = _SCHEMA[sec][key]
            try:
                value = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"{sec}.{key}: {exc}", path, lines.get((sec, key))) from exc
            if sec == "scenario" and key == "schema_version":
                if value != SCHEMA_VERSION:
                    raise ConfigError(
                        f"scenario.schema_version: unsupported version {value} (expected {SCHEMA_VERSION})",
                        path, lines.get((sec, key)),
                    )
                continue
            if sec == "estimator" and key in _ESTIMATOR_KEYS:
                est[key] = value
            elif sec == "arp" and key in _ARP_KEYS:
                arp[key] = value
            else:
                values[name] = (value, lines.get((sec, key)))

    if "kind" not in values:
        raise ConfigError("scenario.kind is required", path, lines.get(("scenario", None)))
    kind = values["kind"][0]
    if kind not in KINDS:
        raise ConfigError(f"scenario.kind: must be one of {', '.join(KINDS)}, got {kind!r}", path,
                          values["kind"][1])

    kwargs = {k: v for k, (v, _) in values.items()}
    kwargs.setdefault("scenario_id", kind)
    if "replications" not in kwargs:
        kwargs["replications"] = {"estimator-sweep": 500, "custom": 10}.get(kind, 100)
    try:
        kwargs["estimator"] = EstimatorConfig(**est)
    except ValueError as exc:
        raise ConfigError(f"estimator: {exc}", path, lines.get(("estimator", None))) from exc
    try:
        kwargs["arp"] = ArpParams(**arp)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"arp: {exc}", path, lines.get(("arp", None))) from exc

    cfg = ScenarioConfig(**kwargs)
    _validate(cfg, path, {name: line for name, (_, line) in values.items()})
    return cfg


def _validate(cfg: ScenarioConfig, path, lines: dict) -> None:
    def fail(name: str, message: str):
        raise ConfigError(f"{name}: {message}", path, lines.get(name))

    if cfg.replications < 0:
        fail("replications", f"must be >= 0, got {cfg.replications}")
    if cfg.seed < 0:
        fail("seed", f"must be >= 0, got {cfg.seed}")
    if cfg.workers < 1:
        fail("workers", f"must be >= 1, got {cfg.workers}")
    if any(n < 0 for n in cfg.n1):
        fail("n1", f"device counts must be >= 0, got {list(cfg.n1)}")
    if cfg.n2 < 0:
        fail("n2", f"device count must be >= 0, got {cfg.n2}")
    if any(n < 1 for n in cfg.grid):
        fail("grid", f"estimator grid points must be >= 1, got {list(cfg.grid)}")
    for name in ("activation_window", "beta_a", "beta_b", "reporting_interval", "tau2"):
        if not getattr(cfg, name) > 0:
            fail(name, f"must be > 0, got {getattr(cfg, name)}")
    for name in ("r_req_1", "r_req_2"):
        if not 0 < getattr(cfg, name) < 1:
            fail(name, f"must lie in (0, 1), got {getattr(cfg, name)}")
    if not 0 <= cfg.collision_threshold <= 1:
        fail("collision_threshold", f"must lie in [0, 1], got {cfg.collision_threshold}")
    if cfg.calm_raos < 1:
        fail("calm_raos", f"must be >= 1, got {cfg.calm_raos}")
    if not 1 <= cfg.base_raos_per_frame <= cfg.arp.max_raos_per_lte_frame:
        fail("base_raos_per_frame", "must lie in 1..max_raos_per_lte_frame")
    if cfg.model not in ("exact", "mixture"):
        fail("model", f"must be 'exact' or 'mixture', got {cfg.model!r}")
    bad = [s for s in cfg.schemes if s not in SCHEMES]
    if bad or not cfg.schemes:
        fail("schemes", f"must be a subset of {', '.join(SCHEMES)}, got {list(cfg.schemes)}")
    for tau in cfg.tau1:
        if not tau > 0:
            fail("tau1", f"latency budgets must be > 0, got {tau}")
        try:
            L = raos_for_delay(tau, cfg.arp)
        except ValueError as exc:
            fail("tau1", str(exc))
        if L < 3:
            fail("tau1", f"tau1 = {tau} s gives L = {L}; at least 3 RAOs per access frame are needed")
        if cfg.activation_window > tau / 2:
            fail("activation_window",
                 f"the burst must fit in one access frame: {cfg.activation_window} s > tau1/2 = {tau / 2} s")


def load_config(path) -> ScenarioConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(p)) from exc
    return parse_config(text, str(p))
