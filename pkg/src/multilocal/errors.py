"""Exception hierarchy shared by the planning modules."""


class PlanningError(Exception):
    """Base class for every error raised by :mod:`multilocal`."""


class OutOfRange(PlanningError, ValueError):
    """A path parameter outside ``[0, 1]`` was queried."""


class Unreachable(PlanningError):
    """The end effector is outside the annulus the arm can reach."""


class DegenerateVertical(PlanningError):
    """The end effector sits directly above the shoulder, so the arm plane is undefined."""


class EmptyGraph(PlanningError):
    """No configuration-graph vertex survived filtering at t=0 or t=1."""


class Exhausted(PlanningError):
    """The search heap emptied before the requested number of classes was found.

    The partial search state is kept on the exception so callers can still use
    whatever was found.
    """

    def __init__(self, found, nag=None, hits=None):
        super().__init__(f"search exhausted after finding {found} class(es)")
        self.found = found
        self.nag = nag
        self.hits = list(hits or [])


class BrokenChain(PlanningError):
    """A ``came_from`` back-pointer is missing while extracting a path."""


class DegenerateGuess(PlanningError):
    """An initial guess does not advance along the end-effector path."""


class DegenerateCrossing(PlanningError):
    """A polyline passes exactly through an anchor ray in a way that cannot be resolved."""


class CapExceeded(PlanningError):
    """A brute-force oracle was asked to enumerate a graph larger than its cap."""


class SolveFailure(PlanningError):
    """The trajectory optimizer stopped without meeting its tolerances.

    ``report`` and ``trajectory`` hold the last iterate for diagnostics.
    """

    def __init__(self, reason, report=None, trajectory=None):
        super().__init__(reason)
        self.reason = reason
        self.report = report
        self.trajectory = trajectory


class NoConverged(PlanningError):
    """Every candidate solve failed, so there is nothing to select."""


class PipelineFailure(PlanningError):
    """The planning pipeline produced no usable trajectory."""

    def __init__(self, reason, result=None):
        super().__init__(reason)
        self.reason = reason
        self.result = result


class SceneError(PlanningError, ValueError):
    """A scene file failed validation; the message names the offending field."""
