"""Exception types shared across the package."""


class QuaternionDomainError(ValueError):
    """Input outside the domain of an operation (zero inverse, non-pure axis, ...)."""


class DimensionError(ValueError):
    """Array shapes do not agree with the expected quaternion layout."""


class StructureError(ValueError):
    """A real matrix or stacked vector lacks the required quaternion structure."""

    def __init__(self, message, deviation=None):
        super().__init__(message)
        self.deviation = deviation


class NumericError(ArithmeticError):
    """Ill-conditioned or non-finite numerical result."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class DivergenceError(NumericError):
    """An iterative filter produced non-finite values."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ConvergenceError(NumericError):
    """An iteration did not reach its tolerance."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class ContractError(ValueError):
    """Caller broke a documented precondition (e.g. a real-valued function is complex)."""
