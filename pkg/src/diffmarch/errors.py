"""Exception types shared across the library."""


class ValidationError(ValueError):
    """An argument or field violates a documented precondition."""


class FieldParseError(ValidationError):
    """A field or image file is malformed; the message carries a line number."""


class NumericalError(RuntimeError):
    """A computation produced non-finite or internally inconsistent results."""
