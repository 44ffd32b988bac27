"""Decentralized multi-robot trajectory replanning with closed-form peer prediction."""

from .compensator import (
    CompensatorPoly, HorizonBuffer, TrajectoryCompensator, compose_prediction,
    fit_compensator, push_observation,
)
from .errors import (
    BracketCollapse, DegenerateInput, DurationMismatch, NonMonotoneTimestamp,
    NonPositiveDuration, PackingFailure, SingularKKT, SingularTransform, SwarmTrajError,
)
from .optimizer import (
    CondensedPlanner, CostWeights, Limits, Peer, PlanContext, RobotShape, condense,
    plan, scaled_separation,
)
from .primitive import JerkSmoothPrimitive, PrimitiveOptions, solve_min_time
from .tracking import TrackingErrorEstimator, TrackingHistory, tracking_error
from .trajectory import QuinticTrajectory

__version__ = "0.1.0"

__all__ = [
    "BracketCollapse", "CompensatorPoly", "CondensedPlanner", "CostWeights",
    "DegenerateInput", "DurationMismatch", "HorizonBuffer", "JerkSmoothPrimitive",
    "Limits", "NonMonotoneTimestamp", "NonPositiveDuration", "PackingFailure", "Peer",
    "PlanContext", "PrimitiveOptions", "QuinticTrajectory", "RobotShape", "SingularKKT",
    "SingularTransform", "SwarmTrajError", "TrackingErrorEstimator", "TrackingHistory",
    "TrajectoryCompensator", "compose_prediction", "condense", "fit_compensator", "plan",
    "push_observation", "scaled_separation", "solve_min_time", "tracking_error",
]
