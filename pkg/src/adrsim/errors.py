"""Exception types shared across the simulator."""


class AdrSimError(Exception):
    """Base class for simulator errors."""


class InvalidParameterError(AdrSimError, ValueError):
    """A numeric or structural parameter violates its preconditions."""


class ConfigurationError(AdrSimError, ValueError):
    """A configuration is internally inconsistent or infeasible."""


class UrdfParseError(AdrSimError):
    """Robot description XML is malformed."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class UrdfSemanticError(AdrSimError):
    """Robot description XML is well-formed but violates model rules."""


class ProtocolError(AdrSimError):
    """An episode-protocol request arrived in an invalid session state."""
