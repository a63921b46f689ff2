"""Scenario generation, persistence, experiment sweeps and the command line."""

from .experiment import ExperimentConfig, ExperimentError, run_experiment
from .generator import GeneratorParams, ScenarioConfigError, generate_scenario
from .scenario_io import SCHEMA_VERSION, ScenarioFormatError, dump_scenario, load_scenario, read_scenario, write_scenario

__all__ = [
    "ExperimentConfig", "ExperimentError", "run_experiment",
    "GeneratorParams", "ScenarioConfigError", "generate_scenario",
    "SCHEMA_VERSION", "ScenarioFormatError", "dump_scenario", "load_scenario",
    "read_scenario", "write_scenario",
]
