"""Exception hierarchy shared by all modules."""


class TpmError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(TpmError, ValueError):
    """Invalid parameters (geometry, epsilon, pattern width, ...)."""


class DimensionError(ParameterError):
    """Array shape does not match the machine geometry."""


class InvalidStateError(TpmError):
    """Generator or session state that cannot be advanced."""


class ProtocolOrderError(TpmError):
    """Operation called out of order, e.g. two packages in flight."""


class FramingError(TpmError):
    """Malformed, truncated or oversized wire data."""


class ProtocolError(TpmError):
    """Peers disagree about protocol state."""
