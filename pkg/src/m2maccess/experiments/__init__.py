"""Configuration, scenario runners, result files and the command-line interface."""

from .config import KINDS, SCHEMA_VERSION, ConfigError, ScenarioConfig, load_config, parse_config
from .results import (
    AGGREGATE_COLUMNS,
    RESULT_COLUMNS,
    ResultRow,
    aggregate,
    aggregate_path,
    emit_results,
    emit_table,
    estimator_summary,
    read_results,
)
from .runners import (
    DIMENSIONING_COLUMNS,
    DimensioningRow,
    comparison_scenario,
    run_custom,
    run_dimensioning_table,
    run_estimator_sweep,
    run_reliability_comparison,
    run_scenario,
)

__all__ = [
    "AGGREGATE_COLUMNS",
    "ConfigError",
    "DIMENSIONING_COLUMNS",
    "DimensioningRow",
    "KINDS",
    "RESULT_COLUMNS",
    "ResultRow",
    "SCHEMA_VERSION",
    "ScenarioConfig",
    "aggregate",
    "aggregate_path",
    "comparison_scenario",
    "emit_results",
    "emit_table",
    "estimator_summary",
    "load_config",
    "parse_config",
    "read_results",
    "run_custom",
    "run_dimensioning_table",
    "run_estimator_sweep",
    "run_reliability_comparison",
    "run_scenario",
]
