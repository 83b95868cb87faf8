"""Exception hierarchy shared by all modules."""


class AiryLayerError(Exception):
    """Base class for every error raised by the package."""


class InputError(AiryLayerError, ValueError):
    """Malformed input (dimension mismatch, out-of-range parameter)."""


class IntegrationError(AiryLayerError):
    """ODE integration gave up; ``diagnostics`` holds partial state."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DomainError(AiryLayerError):
    """Query lies outside the region where an operation is defined."""


class SolverError(AiryLayerError):
    """Nonlinear solve failed to converge; ``trace`` holds residual history."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class DegenerateGeometryError(AiryLayerError):
    """A quantity diverges because the geometry is degenerate (fold, caustic)."""


class ReliabilityError(AiryLayerError):
    """Numerical reference data cannot be trusted for the requested window."""


class ConfigError(AiryLayerError):
    """Run configuration failed validation."""


class JoinMismatchError(AiryLayerError):
    """Prediction and exact datasets do not share the same query set."""


class ConsistencyError(AiryLayerError):
    """Two routes to the same quantity disagree beyond tolerance."""


__all__ = [name for name, obj in list(globals().items())
           if isinstance(obj, type) and issubclass(obj, AiryLayerError)]
