"""Motion planning over hybrid-zonotope free-space models with informed pruning."""
from .errors import (
    ContractViolation,
    DegenerateInformedSet,
    DegenerateRegion,
    EmptyFreeSpace,
    EnumerationBudgetExceeded,
    HzPlanError,
    MergeRequired,
    NotPlottable,
    ScenarioError,
    SolverStall,
    StateInObstacle,
    Unreachable,
)
from .planner import PlannerParams, PlanResult, plan
from .sampling import SamplerKind, WalkKind
from .scenario import Scenario, load_scenario, write_scenario

__all__ = [
    "ContractViolation",
    "DegenerateInformedSet",
    "DegenerateRegion",
    "EmptyFreeSpace",
    "EnumerationBudgetExceeded",
    "HzPlanError",
    "MergeRequired",
    "NotPlottable",
    "PlanResult",
    "PlannerParams",
    "SamplerKind",
    "Scenario",
    "ScenarioError",
    "SolverStall",
    "StateInObstacle",
    "Unreachable",
    "WalkKind",
    "load_scenario",
    "plan",
    "write_scenario",
]
