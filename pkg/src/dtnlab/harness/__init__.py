"""Scenario configs, the verification engine and the command line."""
from .config import SCENARIOS, ScenarioConfig, load_config, make_config
from .scenarios import Report, convergence_study, run_scenario, run_suite

__all__ = ["SCENARIOS", "Report", "ScenarioConfig", "convergence_study", "load_config", "make_config",
           "run_scenario", "run_suite"]
