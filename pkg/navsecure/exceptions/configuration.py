from navsecure.exceptions.base import NavSecureError


class ConfigError(NavSecureError):
    """
    Thrown when the run configuration can't be used.
    """

    def __init__(self, message="Configuration is invalid! Use '--help' for more information."):
        super().__init__(message)


class CheckpointFormatError(NavSecureError):
    """
    Thrown when a checkpoint or replay log file can't be parsed.
    """

    def __init__(self, message="Checkpoint file is malformed!"):
        super().__init__(message)


class IncompatibleCheckpointError(NavSecureError):
    """
    Thrown when a checkpoint doesn't match the dimensions or fingerprint it is being used with.
    """

    def __init__(self, message="Checkpoint is incompatible with the requested run!"):
        super().__init__(message)


class ReportParseError(NavSecureError):
    """
    Thrown when a metrics report file can't be parsed. Carries the path and location of the problem.
    """

    def __init__(self, path: str, location: str, reason: str):
        self.path = path
        self.location = location
        super().__init__(f"Could not parse report '{path}' at {location}: {reason}")
