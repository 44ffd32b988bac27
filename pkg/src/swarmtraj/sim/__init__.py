"""Lockstep swarm simulation."""

from .metrics import aggregate, metrics, timing_stats
from .runner import Broadcast, Predictor, RunConfig, RunReport, plan_agent, run
from .scenario import (
    MODELS, RobotSpec, Scenario, circle_preset, density_preset, generate_scenario, preset,
)
from .world import (
    CollisionEvent, PlantParams, WorldState, detect_collisions, detect_deadlock, step,
)

__all__ = [
    "MODELS", "Broadcast", "CollisionEvent", "PlantParams", "Predictor", "RobotSpec",
    "RunConfig", "RunReport", "Scenario", "WorldState", "aggregate", "circle_preset",
    "density_preset", "detect_collisions", "detect_deadlock", "generate_scenario",
    "metrics", "plan_agent", "preset", "run", "step", "timing_stats",
]
