"""Exception types shared across the package."""


class RCGANError(Exception):
    """Base class for errors raised by this package."""


class DataError(RCGANError):
    """Malformed input data: ragged rows, unknown labels, bad numerics."""


class QueryError(RCGANError):
    """Invalid query: bad column, bad bounds, or unanswerable request."""


class TrainingError(RCGANError):
    """Non-finite loss or gradient during training.

    Carries the history accumulated up to the failing step so partial
    runs can still be inspected.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history


class CheckpointError(RCGANError):
    """Unreadable, truncated, or version-mismatched checkpoint file."""


class ParseError(RCGANError):
    """User query text outside the supported grammar."""

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class RoutingError(RCGANError):
    """No registered result generator can answer a sub-query."""


class ExperimentError(RCGANError):
    """Fidelity experiment cannot run as configured."""
