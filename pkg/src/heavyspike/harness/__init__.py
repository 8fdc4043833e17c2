"""Experiment harness: pipelines, sweeps, CSV output, oracle checks and the CLI."""

from .pipeline import METHODS, MethodSpec, run_method
from .sweep import Cell, SweepConfig, run_sweep

__all__ = ["METHODS", "MethodSpec", "run_method", "Cell", "SweepConfig", "run_sweep"]
