"""Experiment harness: configuration, runs, file outputs and verification suites."""

from .config import ExperimentConfig
from .runner import ComparisonRow, compare, run_experiment, sweep
from .suites import verify

__all__ = ["ComparisonRow", "ExperimentConfig", "compare", "run_experiment", "sweep", "verify"]
