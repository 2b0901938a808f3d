"""Exception and warning types shared across the package."""


class FracgrowError(Exception):
    """Base class for all package errors."""


class ConfigError(FracgrowError, ValueError):
    """Invalid or malformed configuration (CLI exit code 2)."""


class BasisMismatchError(FracgrowError, ValueError):
    """A field was combined with an operator defined on a different basis."""


class NumericalError(FracgrowError, RuntimeError):
    """A scalar root finder or quadrature did not converge."""


class StepFailure(FracgrowError, RuntimeError):
    """Newton iteration for one time step did not converge (CLI exit code 3).

    Attributes
    ----------
    residual : float
        Last stacked residual norm reached.
    step_index : int or None
        Index of the failed step when raised from a full simulation.
    partial : object or None
        Partial trajectory up to the failed step, if available.
    """

    def __init__(self, message, residual=float("nan"), step_index=None, partial=None):
        super().__init__(message)
        self.residual = residual
        self.step_index = step_index
        self.partial = partial


class AssumptionError(FracgrowError):
    """A structural assumption required by a study is violated (CLI exit code 4)."""

    def __init__(self, assumption, message):
        super().__init__(f"{assumption} violated: {message}")
        self.assumption = assumption


class AssumptionWarning(UserWarning):
    """A run proceeds outside the regime covered by the structural assumptions."""
