"""Exception types raised across the planner."""


class HzPlanError(Exception):
    """Base class for all planner errors."""


class ContractViolation(HzPlanError, ValueError):
    """A caller broke a documented precondition (shapes, ranges, ...)."""


class SolverStall(HzPlanError):
    """The simplex solver hit its iteration cap without terminating."""


class DegenerateInformedSet(HzPlanError, ValueError):
    """Best cost is shorter than the straight-line start/goal distance."""


class EmptyFreeSpace(HzPlanError):
    pass


class DegenerateRegion(HzPlanError, ValueError):
    pass


class EnumerationBudgetExceeded(HzPlanError):
    pass


class StateInObstacle(HzPlanError):
    pass


class Unreachable(HzPlanError):
    pass


class MergeRequired(HzPlanError, ValueError):
    """Scenario obstacles overlap; ``pairs`` lists the offending index pairs."""

    def __init__(self, pairs):
        self.pairs = list(pairs)
        super().__init__(f"obstacle interiors overlap, merge required: {self.pairs}")


class ScenarioError(HzPlanError, ValueError):
    """Malformed scenario file. ``where`` is a field path or line/column."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


class NotPlottable(HzPlanError):
    pass
