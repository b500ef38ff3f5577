"""Exception hierarchy shared by every hybridsim module."""


class HybridSimError(Exception):
    """Base class for all errors raised by hybridsim."""


class ParseError(HybridSimError):
    """A document could not be parsed (malformed JSON or wrong shape)."""


class ValidationError(HybridSimError):
    """A model invariant does not hold.

    ``field`` names the offending field, e.g. ``links[l0].bandwidth_bps``.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field

    def __reduce__(self):
        return (type(self), (str(self), self.field))


class ResolutionError(ValidationError):
    """An identifier (device, process, behavior) does not resolve."""


class InfeasibleMappingError(ValidationError):
    """A mapping violates the feasible set, or no feasible mapping exists."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)

    def __reduce__(self):
        return (type(self), (str(self), self.violations))


class ParameterError(ValidationError):
    """A behavior parameter is missing or out of its domain."""


class ModelDomainError(HybridSimError):
    """A cost model produced a negative time."""


class SingularFitError(HybridSimError):
    """Least-squares fit is undetermined (degenerate abscissae)."""


class SimulationError(HybridSimError):
    """Base class for errors raised while a simulation is running."""


class RoutingError(SimulationError):
    """Two communicating devices are not connected."""

    def __init__(self, a, b):
        super().__init__(f"no route between devices {a!r} and {b!r}")
        self.pair = (a, b)

    def __reduce__(self):
        return (type(self), self.pair)


class DeadlockError(SimulationError):
    """No process can make progress while some are still blocked."""

    def __init__(self, blocked):
        self.blocked = sorted(blocked)
        super().__init__("deadlock: blocked instances " + ", ".join(self.blocked))

    def __reduce__(self):
        return (type(self), (self.blocked,))


class TraceError(SimulationError):
    """An event trace is malformed (e.g. negative running demand)."""


class ExpansionError(HybridSimError):
    """A suite cannot be expanded into a finite list of instances."""


class DimensionError(HybridSimError):
    """Objective vectors of different lengths were mixed."""
