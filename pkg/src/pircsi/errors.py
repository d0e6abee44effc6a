"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Raised when arguments are outside the documented parameter ranges."""


class ProtocolError(Exception):
    """Raised when a query or answer is structurally invalid for the protocol."""


class WireParseError(ProtocolError):
    """Raised when a byte string cannot be parsed; records the failing offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class AuditSizeError(Exception):
    """Raised when an instance is too large for exhaustive auditing.

    The message points the caller at the Monte-Carlo auditor, which has no
    size limit.
    """
