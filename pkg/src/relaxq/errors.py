"""Exception hierarchy shared by all relaxq modules."""

from __future__ import annotations


class RelaxqError(Exception):
    """Base class for every error raised by this package."""


class CatalogFormatError(RelaxqError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class QuerySyntaxError(RelaxqError, ValueError):
    pass


class UnknownAttributeError(RelaxqError, ValueError):
    pass


class StatsFormatError(RelaxqError, ValueError):
    pass


class BudgetError(RelaxqError, ValueError):
    pass


class GridTooLargeError(RelaxqError, ValueError):
    pass


class CorpusSpecError(RelaxqError, ValueError):
    pass
