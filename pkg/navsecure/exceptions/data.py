from navsecure.exceptions.base import NavSecureError


class InvalidTransitionError(NavSecureError):
    """
    Thrown when a transition offered to the replay buffer breaks its invariants.
    """

    def __init__(self, message="Transition is invalid!"):
        super().__init__(message)


class InsufficientDataError(NavSecureError):
    """
    Thrown when the replay buffer cannot provide the requested sequences.
    """

    def __init__(self, message="Not enough stored experience to sample from!"):
        super().__init__(message)


class InvalidActionError(NavSecureError):
    """
    Thrown when an action outside of [-1, 1] is passed to the simulator.
    """

    def __init__(self, message="Action is out of range!"):
        super().__init__(message)


class InvalidScenarioError(NavSecureError):
    """
    Thrown when a scenario specification is malformed or violates its invariants.
    """

    def __init__(self, message="Scenario specification is invalid!"):
        super().__init__(message)


class EmptyLogsError(NavSecureError):
    """
    Thrown when a metric is requested over an empty collection of episode logs.
    """

    def __init__(self, message="At least one episode log is required!"):
        super().__init__(message)
