"""Exception hierarchy for the division-of-labor toolkit."""

from typing import List, Optional


class DivisionOfLaborError(Exception):
    """Base class for every error raised by the toolkit."""


class GraphError(DivisionOfLaborError, ValueError):
    """Invalid graph construction or a graph of the wrong kind for an operation."""


class ParameterError(DivisionOfLaborError, ValueError):
    """Out-of-domain argument (vertex id, task id, B, N, epsilon)."""


class ReducibleChainError(DivisionOfLaborError, ValueError):
    """Stationary distribution requested for a chain that is not irreducible."""

    def __init__(self, message: str, closed_classes: List[List[int]]):
        super().__init__(f"{message}; closed classes: {closed_classes}")
        self.closed_classes = closed_classes


class AbsorbedError(DivisionOfLaborError):
    """A step was requested from an engine whose total rate is zero."""

    def __init__(self, time: float):
        super().__init__(f"absorbed at t={time}")
        self.time = time


class SimulationError(DivisionOfLaborError, RuntimeError):
    """An engine invariant was broken."""


class LogWindowError(DivisionOfLaborError, ValueError):
    """The event log does not cover the requested time window."""


class SpecError(DivisionOfLaborError, ValueError):
    """Command-line usage error."""

    def __init__(self, message: str, token: Optional[str] = None):
        text = f"{message} (offending token: {token!r})" if token is not None else message
        super().__init__(text)
        self.token = token
