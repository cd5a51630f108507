"""Exception hierarchy shared by all bnsens modules."""

from __future__ import annotations


class BNSensError(Exception):
    """Base class for every error raised by bnsens."""


# -- network file / model structure -----------------------------------------

class NetworkError(BNSensError, ValueError):
    """The network could not be loaded or is structurally invalid."""


class BifSyntaxError(NetworkError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


class UnsupportedNodeType(NetworkError):
    pass


class UnknownVariable(NetworkError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class UnknownState(NetworkError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class UnknownParameter(NetworkError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class ArityMismatch(NetworkError):
    pass


class MissingRow(NetworkError):
    pass


class RowSumViolation(NetworkError):
    pass


class OutOfRangeProbability(NetworkError):
    pass


class DuplicateDeclaration(NetworkError):
    pass


class CycleDetected(NetworkError):
    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("cycle detected: " + " -> ".join(cycle))


# -- analysis ---------------------------------------------------------------

class QueryError(BNSensError, ValueError):
    """Malformed query (target inside evidence, bad assignment string, ...)."""


class DegenerateCovariation(BNSensError, ValueError):
    """Proportional covariation is undefined for a parameter whose original value is 1."""


class ZeroEvidenceProbability(BNSensError, ZeroDivisionError):
    pass


class NonBinaryTarget(BNSensError, ValueError):
    pass


class NotMostLikely(BNSensError, ValueError):
    pass


class SameCpt(BNSensError, ValueError):
    pass


class InsufficientParameters(BNSensError, ValueError):
    pass


class TooLarge(BNSensError, ValueError):
    pass
