"""Experiment configuration, scenario runners, CSV/SVG output and the ``sep3d`` CLI."""

from .config import (
    OUTPUT_ENV,
    SCHEMA_ID,
    SCENARIOS,
    ConfigError,
    ExperimentConfig,
    Grid,
    apply_overrides,
    default_config,
    load_config,
    parse_config,
)
from .runners import QfiReport, run_crb_sweep, run_mc_variance, run_modal_convergence, run_qfi_report
from .tables import CSV_SCHEMA, ResultTable, read_csv, render_csv, write_csv

__all__ = [
    "OUTPUT_ENV", "SCHEMA_ID", "SCENARIOS", "CSV_SCHEMA", "ConfigError", "ExperimentConfig", "Grid",
    "QfiReport", "ResultTable", "apply_overrides", "default_config", "load_config", "parse_config",
    "read_csv", "render_csv", "write_csv", "run_crb_sweep", "run_mc_variance",
    "run_modal_convergence", "run_qfi_report",
]
