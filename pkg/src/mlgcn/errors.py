"""Exception hierarchy shared by every mlgcn module."""


class MLGCNError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(MLGCNError, ValueError):
    """Operand dimensions do not line up."""


class DatasetError(MLGCNError):
    """A dataset directory failed to parse or validate."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class SamplerError(MLGCNError):
    """The noise distribution cannot produce an admissible negative."""


class ConfigError(MLGCNError):
    """A config file contains an unknown key or an invalid value."""


class TrainingError(MLGCNError):
    """Training diverged (non-finite loss or gradient)."""
