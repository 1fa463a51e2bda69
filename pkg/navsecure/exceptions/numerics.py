from navsecure.exceptions.base import NavSecureError


class ShapeError(NavSecureError):
    """
    Thrown when tensors of incompatible shapes are combined.
    """

    def __init__(self, message="Tensor shapes do not conform!"):
        super().__init__(message)


class DomainError(NavSecureError):
    """
    Thrown when an operation is evaluated outside its domain, e.g. the log of a non-positive value.
    """

    def __init__(self, message="Operation evaluated outside of its domain!"):
        super().__init__(message)


class DistributionError(NavSecureError):
    """
    Thrown when a distribution is built from invalid parameters.
    """

    def __init__(self, message="Invalid distribution parameters!"):
        super().__init__(message)


class GradientError(NavSecureError):
    """
    Thrown when a backward pass or a parameter set is used incorrectly.
    """

    def __init__(self, message="Gradient computation failed!"):
        super().__init__(message)


class NonFiniteLossError(NavSecureError):
    """
    Thrown when a loss evaluates to NaN or infinity. The offending term is kept so it can be reported.
    """

    def __init__(self, term: str = "loss", message: str = ""):
        self.term = term
        super().__init__(message or f"Non-finite value in loss term '{term}', training step aborted.")


class NumericFailureError(NavSecureError):
    """
    Thrown when training produces too many consecutive non-finite losses to continue.
    """

    def __init__(self, message="Training aborted after repeated non-finite losses!"):
        super().__init__(message)


class InfeasibleProblemError(NavSecureError):
    """
    Thrown when no policy of a constrained problem satisfies its cost budget.
    """

    def __init__(self, message="No policy satisfies the cost budget!"):
        super().__init__(message)
