"""Scenarios, closed-loop simulation, outputs and the command line."""
from .scenario import Motion, Scenario, ScenarioError, ScriptedObstacle, dilate_world, from_dict, load_scenario, shipped_scenarios
from .simulate import SimResult, TraceRecord, build_model, simulate, step_pipeline

__all__ = [
    "Motion", "Scenario", "ScenarioError", "ScriptedObstacle", "SimResult", "TraceRecord", "build_model",
    "dilate_world", "from_dict", "load_scenario", "shipped_scenarios", "simulate", "step_pipeline",
]
