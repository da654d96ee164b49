"""Config-driven experiments and verification suites."""

from .config import SCHEMA, SCHEMA_VERSION, ExperimentConfig, load_config
from .report import Check, ScenarioResult, VerificationReport
from .runner import run_experiment, run_trajectory
from .suites import SCENARIOS, SUITES, verify_suite

__all__ = ["SCHEMA", "SCHEMA_VERSION", "ExperimentConfig", "load_config", "Check",
           "ScenarioResult", "VerificationReport", "run_experiment", "run_trajectory",
           "SCENARIOS", "SUITES", "verify_suite"]
