"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class SigscopeError(Exception):
    exit_code = 1


class ConfigError(SigscopeError, ValueError):
    exit_code = 2


class DataError(SigscopeError, ValueError):
    """Malformed or invalid input data."""

    exit_code = 3


class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class ValidationError(DataError):
    pass


class InsufficientPointsError(DataError):
    pass


class DegenerateInputError(SigscopeError, ArithmeticError):
    """Numerically degenerate input (singular fit, non-embeddable dissimilarities)."""

    exit_code = 4


class DegenerateGeometryError(DegenerateInputError):
    pass


class ResolutionUnavailableError(SigscopeError):
    exit_code = 4
