"""Network-aware coordination of camera UAVs over a range-limited radio network."""

from .world import Location, NodeKind, WorldError, WorldMap, build_world
from .transition import Aborted, Break, Move, State, Unpredictable, Wait, apply, initial_state
from .planner import Goal, Metrics, Plan, PlanningError, evaluate, plan_mission, plan_network_unaware, replan
from .belief import DiagnosisError, Explanation, History, Obs, explain, project, unexpected
from .harness import Scenario, Trace, compare, replay, run

__all__ = [
    "Aborted", "Break", "DiagnosisError", "Explanation", "Goal", "History", "Location", "Metrics", "Move",
    "NodeKind", "Obs", "Plan", "PlanningError", "Scenario", "State", "Trace", "Unpredictable", "Wait",
    "WorldError", "WorldMap", "apply", "build_world", "compare", "evaluate", "explain", "initial_state",
    "plan_mission", "plan_network_unaware", "project", "replan", "replay", "run", "unexpected",
]
