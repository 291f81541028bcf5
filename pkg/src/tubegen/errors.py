"""Exception hierarchy shared by all tubegen modules."""


class TubegenError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(TubegenError, ValueError):
    """An argument violates a documented precondition or invariant."""


class FormatError(TubegenError):
    """A file is unreadable, truncated, or not a supported image format."""


class SamplingFailureError(TubegenError):
    """Rejection sampling exhausted its attempt budget.

    The message names the constraint that kept failing.
    """


class EmptyMaskError(TubegenError):
    """An operation produced or received a mask with no set pixels."""


class UndefinedMetricError(TubegenError):
    """A metric has no defined value for the given inputs."""


class NumericalFailureError(TubegenError):
    """Optimization hit a non-finite loss.

    Carries the partial trace collected up to the failing step in
    ``trace``.
    """

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class ConfigError(TubegenError):
    """A run configuration file is missing, malformed, or inconsistent."""
