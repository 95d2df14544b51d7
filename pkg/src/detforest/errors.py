"""Exception types shared across the package.

ValidationError covers malformed inputs and precondition violations
(CLI exit code 2); NumericalError and its subclasses cover convergence
and conditioning failures (CLI exit code 3).
"""


class DetforestError(Exception):
    pass


class ValidationError(DetforestError):
    """Bad input data or violated precondition."""


class NumericalError(DetforestError):
    """Numerical procedure failed to reach its tolerance."""


class InterpolationError(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConvergenceError(NumericalError):
    pass


class KernelError(NumericalError):
    """Kernel failed a marginal/invariant check during sampling or assembly."""
