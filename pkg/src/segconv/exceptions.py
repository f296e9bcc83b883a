"""Exception types raised across segconv."""


class SegconvError(Exception):
    """Base class for all errors raised by this package."""


class ContractError(SegconvError, ValueError):
    """An argument violates an operation's precondition (e.g. channel mismatch)."""


class ShapeError(SegconvError, ValueError):
    """Geometry is degenerate or operands cannot be combined spatially."""


class StateError(SegconvError, RuntimeError):
    """An object was used out of order, e.g. ``backward`` before ``forward``."""


class ParseError(SegconvError, ValueError):
    """Malformed binary or text input.

    ``offset`` is the byte position where parsing failed, when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
