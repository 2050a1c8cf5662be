"""Exception types shared across the package."""


class PolyembedError(Exception):
    """Base class for errors raised by this package."""


class ParseError(PolyembedError):
    """A text input (edge list, prior file, ...) is malformed."""


class ValidationError(PolyembedError):
    """An argument violates a documented precondition."""


class CapacityError(PolyembedError):
    """The requested operation exceeds a built-in size guard."""


class ProtocolError(PolyembedError):
    """An evaluation protocol was used inconsistently."""


class NumericsError(PolyembedError):
    """Non-finite values were produced during training."""
