"""Batch experiments driven by YAML configs."""

from .config import ConfigError, config_hash, expand_sweep, load_config, parse_config
from .runner import (
    ExperimentResult,
    ResultRecord,
    emit_tables,
    read_table,
    run_experiment,
)

__all__ = [
    "ConfigError",
    "ExperimentResult",
    "ResultRecord",
    "config_hash",
    "emit_tables",
    "expand_sweep",
    "load_config",
    "parse_config",
    "read_table",
    "run_experiment",
]
