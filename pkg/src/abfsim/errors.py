"""Exception hierarchy shared across the package.

Anything raised on bad user input derives from :class:`UsageError`
(CLI maps it to exit code 2); runtime failures of an otherwise valid
computation derive from :class:`ComputationError` (exit code 3).
"""


class AbfsimError(Exception):
    """Base class for all package errors."""


class UsageError(AbfsimError):
    """Invalid input supplied by the caller (bad config, bad arguments)."""

    exit_code = 2


class ConfigurationError(UsageError):
    """A configuration value is missing, malformed, or out of range."""


class ComputationError(AbfsimError):
    """A valid computation failed while running."""

    exit_code = 3


class QuadratureError(ComputationError):
    """The slice quadrature cannot certify its accuracy.

    Raised when the integrand has not decayed below the tail tolerance at
    the edges of the integration window, so the result would silently be
    truncated. Enlarging ``y_max`` is the usual fix.
    """


class StepError(ComputationError):
    """A particle update produced a non-finite position or force.

    Parameters
    ----------
    message : str
    particle : int or None
        Index of the first offending particle, when known.
    step : int or None
        Step count at which the failure was detected.
    """

    def __init__(self, message, particle=None, step=None):
        detail = message
        if particle is not None:
            detail += f" (particle {particle}"
            if step is not None:
                detail += f", step {step}"
            detail += ")"
        elif step is not None:
            detail += f" (step {step})"
        super().__init__(detail)
        self.particle = particle
        self.step = step


class StabilityError(ComputationError):
    """An explicit PDE step was requested with a time step above the
    positivity/stability bound.

    Attributes
    ----------
    dt_max : float
        Largest admissible step for the offending configuration.
    """

    def __init__(self, message, dt_max=None):
        if dt_max is not None:
            message += f" (stable dt <= {dt_max:.6g})"
        super().__init__(message)
        self.dt_max = dt_max


class SingularDensityError(ComputationError):
    """The density column under a grid cell carries no mass, so the
    conditional force there is undefined (only possible with alpha = 0)."""
