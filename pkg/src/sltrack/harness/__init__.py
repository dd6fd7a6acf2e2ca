from .config import ConfigError, Disturbance, SAParams, ScenarioConfig, SensorParams, dump_config, get_preset, parse_config
from .runner import METRICS, MonteCarloResult, RunRecord, run_monte_carlo, run_once
from .scenario import Scenario, generate_scenario

__all__ = [
    "METRICS",
    "ConfigError",
    "Disturbance",
    "MonteCarloResult",
    "RunRecord",
    "SAParams",
    "Scenario",
    "ScenarioConfig",
    "SensorParams",
    "dump_config",
    "generate_scenario",
    "get_preset",
    "parse_config",
    "run_monte_carlo",
    "run_once",
]
