"""Distributed event-triggered neuroadaptive consensus for networked
pure-feedback agents with faulty sensors."""
from .config import ScenarioConfig, load_config, parse_config
from .engine import SimResult, compare_thresholds, run, shadow_nominal

__all__ = ["ScenarioConfig", "SimResult", "compare_thresholds", "load_config", "parse_config", "run", "shadow_nominal"]
__version__ = "0.1.0"
