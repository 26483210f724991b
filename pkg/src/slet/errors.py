"""Exception hierarchy shared by the engine, the oracles and the CLI."""


class SletError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SletError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class ConfigurationError(SletError, ValueError):
    """Invalid potential, state or run configuration."""


class NoBoundStateError(SletError):
    """No admissible expansion point (or eigenvalue) exists for the request."""


class ConvergenceError(SletError):
    """An iterative procedure did not reach its tolerance.

    ``residual`` carries the last measured residual so callers can report it.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class FitError(SletError):
    """A least-squares fit was too ill-conditioned to trust."""
