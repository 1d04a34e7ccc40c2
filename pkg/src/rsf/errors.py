"""Exception types raised by :mod:`rsf`."""


class RSFError(Exception):
    """Base class for all package errors."""


class DomainError(RSFError, ValueError):
    """A metric parameter is non-positive or non-finite."""


class StepUnderflowError(RSFError, ValueError):
    """A finite-difference step is too small to change the evaluation point."""


class QuadratureError(RSFError, RuntimeError):
    """Quadrature along a trajectory could not reach its tolerance."""


class IntegrationError(RSFError, RuntimeError):
    """The integrator stopped without a terminal event.

    The truncated trajectory is attached as ``trajectory`` so callers can
    still inspect (or export) what was computed.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class InconsistentTrajectoryError(RSFError, ValueError):
    """Diagnostics of a trajectory contradict its recorded terminal event."""


class SameSideError(RSFError, ValueError):
    """Both ends of a separatrix probe segment share a terminal behavior."""


class ClassificationTimeout(RSFError, RuntimeError):
    """A probe point reached the time horizon without a terminal event."""

    def __init__(self, message, u=None):
        super().__init__(message)
        self.u = u


class ProfileWindowError(RSFError, ValueError):
    """Too few samples deep in the blow-up regime to estimate a profile."""


class PreconditionError(RSFError, ValueError):
    """An input violates the documented precondition of an operation."""
