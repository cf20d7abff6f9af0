"""Error hierarchy: one RingcoreError root, each error also a matching builtin."""

from __future__ import annotations


class RingcoreError(Exception):
    """Base class for every error raised by ringcore."""


class DataSourceError(RingcoreError, RuntimeError):
    """Raised when an input source cannot be reached or read."""


class ParseError(DataSourceError):
    """Raised when an input file is malformed; carries 1-based line/column when known."""

    def __init__(self, message: str, *, line: int | None = None, column: int | None = None) -> None:
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(f"{message}{where}")


class ConfigurationError(RingcoreError, ValueError):
    """Raised when a run configuration is infeasible."""


class HandleMismatchError(ConfigurationError):
    """Raised when a coreset references handles its dataset does not have."""


class MissingLabelsError(ConfigurationError):
    """Raised when a fair build is requested on data without group labels."""


class InvalidHandleError(RingcoreError, IndexError):
    """Raised when a point handle is outside its backend store."""


class UnreachableError(RingcoreError, ValueError):
    """Raised when two graph vertices are disconnected."""

    def __init__(self, source: object, target: object) -> None:
        super().__init__(f"unreachable: no path between {source!r} and {target!r}")


class EmptyCenterSetError(RingcoreError, ValueError):
    """Raised when a cost is requested against no centers."""


class ZeroWeightError(RingcoreError, ValueError):
    """Raised when a point set carries no mass."""


class MassMismatchError(RingcoreError, ValueError):
    """Raised when an assignment constraint does not match the point-set mass."""


class RingMembershipError(RingcoreError, ValueError):
    """Raised when a dataset handed to the ring sampler leaves its ring."""


class BudgetExceededError(RingcoreError, ValueError):
    """Raised when a brute-force oracle would exceed its enumeration budget."""


class TupleLengthError(RingcoreError, ValueError):
    """Raised when Wasserstein tuples do not share one support size."""


class NumericalError(RingcoreError, ArithmeticError):
    """Raised when a numerical invariant is violated beyond tolerance."""
