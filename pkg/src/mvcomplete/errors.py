"""Exception types raised across the package."""


class InvalidArgument(ValueError):
    """An input violates an operation's precondition."""


class NumericalFailure(RuntimeError):
    """A solver produced non-finite values."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class UndefinedMetric(ValueError):
    """A metric has an empty evaluation set or a zero denominator."""


class ParseError(ValueError):
    """A text file could not be parsed; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
