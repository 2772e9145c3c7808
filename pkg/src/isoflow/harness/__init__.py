"""Experiment harness: config parsing, claim registry, runner, CLI."""

from .config import (
    ConfigError,
    DynamicsConfig,
    EnsembleConfig,
    ExperimentConfig,
    KernelConfig,
    load_config,
    save_config,
    validate,
)
from .claims import REGISTRY, ClaimResult, ClaimSpec
from .runner import Heartbeat, RunContext, load_report, run_experiment
from .report import render_report

__all__ = [
    "ConfigError",
    "DynamicsConfig",
    "EnsembleConfig",
    "ExperimentConfig",
    "KernelConfig",
    "load_config",
    "save_config",
    "validate",
    "REGISTRY",
    "ClaimResult",
    "ClaimSpec",
    "Heartbeat",
    "RunContext",
    "load_report",
    "run_experiment",
    "render_report",
]
