"""Exception types shared across the package."""


class InputDomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class FormatError(ValueError):
    """A file does not conform to the expected binary or JSON layout."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
