"""Experiment runner, analysis and CLI for purity-decay simulations."""
from .analysis import analyze, fit_loglog_slope, plateau_stats, write_summary
from .config import ConfigError, ExperimentConfig, load_config, parse_config_text
from .output import emit, load_record, load_records, read_csv
from .runner import CellFailure, RunRecord, run_experiment, run_sweep

__all__ = [
    "analyze", "fit_loglog_slope", "plateau_stats", "write_summary",
    "ConfigError", "ExperimentConfig", "load_config", "parse_config_text",
    "emit", "load_record", "load_records", "read_csv",
    "CellFailure", "RunRecord", "run_experiment", "run_sweep",
]
