"""Exception hierarchy shared by all gaugemap modules."""


class GaugeMapError(Exception):
    """Base class for every error raised by gaugemap."""


class ContractError(GaugeMapError, ValueError):
    """An input violates a documented precondition (e.g. non-Hermitian matrix)."""


class CapacityError(GaugeMapError):
    """Requested Hilbert-space dimension exceeds the configured cap."""


class FieldRangeError(GaugeMapError, ValueError):
    """A field protocol was evaluated outside its time horizon."""


class IntegrationError(GaugeMapError, RuntimeError):
    """An integrator failed (step underflow, solver failure)."""


class ChartError(IntegrationError):
    """The Gauss (Riccati) chart blew up; ``time`` holds the failure time."""

    def __init__(self, message, time):
        super().__init__(message)
        self.time = time


class ResolutionError(GaugeMapError, ValueError):
    """Finite-difference step is too coarse for the requested horizon."""


class PreconditionError(GaugeMapError, ValueError):
    """A mapping precondition failed; ``residual`` holds the measured defect."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class PeriodicityError(PreconditionError):
    """The gauge unitary is not periodic (up to a phase) over the claimed period."""


class UnsupportedModelError(GaugeMapError, ValueError):
    """The model is outside the scope of the requested reduction."""


class ConfigError(GaugeMapError, ValueError):
    """Experiment configuration is invalid."""
