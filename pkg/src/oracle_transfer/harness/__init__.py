"""Configuration, execution, verification, and plotting for experiments."""

from .config import ExperimentConfig
from .runner import (execute, run_experiment, sweep, theorem_bound,
                     read_sweep_csv, write_sweep_csv)
from .verify import CheckResult, VerifyReport, verify_trace
from .plots import emit_plot
