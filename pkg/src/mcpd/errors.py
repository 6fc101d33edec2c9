"""Exception types shared across the package.

The CLI maps these onto distinct exit codes (see ``mcpd.cli``).
"""


class ContractViolation(ValueError):
    """An argument or configuration violates a documented precondition."""


class DataFormatError(ValueError):
    """A data file could not be parsed.

    ``line`` is the 1-based line number of the offending row, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericalError(ArithmeticError):
    """A computation produced a non-finite intermediate or underflowed entirely."""
