"""Gradient-based B-spline local planner without a distance field."""

from .bspline import OutOfDomain, UniformBSpline, basis_matrix, derivative_points, spline_evaluate
from .costs import CostWeights, cost_collide, cost_feasible, cost_fit, cost_smooth
from .optimizer import lbfgs, optimize, refine
from .pipeline import (
    DegenerateRequest,
    PlanRequest,
    PlanResult,
    collision_segments,
    init_trajectory,
    plan,
    time_reassign,
    within_limits,
)
from .search import AnchorPair, GoalOccupied, NoPath, StartOccupied, astar_path, generate_anchors

__all__ = [
    "AnchorPair", "CostWeights", "DegenerateRequest", "GoalOccupied", "NoPath", "OutOfDomain",
    "PlanRequest", "PlanResult", "StartOccupied", "UniformBSpline", "astar_path", "basis_matrix",
    "collision_segments", "cost_collide", "cost_feasible", "cost_fit", "cost_smooth",
    "derivative_points", "generate_anchors", "init_trajectory", "lbfgs", "optimize", "plan",
    "refine", "spline_evaluate", "time_reassign", "within_limits",
]
