"""Exception hierarchy shared by all maskwatch modules."""


class MaskwatchError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(MaskwatchError):
    """Runtime data violates an operation's preconditions."""


class ConfigError(MaskwatchError):
    """A configuration value is out of range or structurally wrong."""


class ParseError(MaskwatchError):
    """A file could not be parsed; message names the offending line."""

    def __init__(self, message, path=None, line=None):
        if path is not None and line is not None:
            message = f"{path}:{line}: {message}"
        elif line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.path = path
        self.line = line


class SchemaError(MaskwatchError):
    """A structured file is missing a required key."""


class ValidationError(MaskwatchError):
    """A loaded object violates one of its declared invariants."""


class ModelFormatError(MaskwatchError):
    """A model file is corrupt or carries the wrong magic header."""


class TrainingError(MaskwatchError):
    """Optimization diverged (non-finite loss) or could not proceed."""


class BackendError(MaskwatchError):
    """An external backend failed; message is tagged with the backend name."""

    def __init__(self, backend_name, message):
        super().__init__(f"backend '{backend_name}': {message}")
        self.backend_name = backend_name
