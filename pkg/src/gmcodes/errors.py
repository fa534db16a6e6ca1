"""Exception and warning types shared by every module of the toolkit.

Errors fall into three families that the command-line front end maps to
distinct exit codes: usage problems, data problems and exceeded resource caps.
"""

from __future__ import annotations


class GmError(Exception):
    """Base class for all toolkit errors that describe bad input data."""


class CapError(GmError):
    """Base class for errors raised when a configured size cap is exceeded."""


class ImpossiblePivot(UserWarning):
    """A preferred pivot column was dependent on earlier pivots and was skipped."""


class LengthMismatch(GmError):
    """Two codes or matrices have incompatible lengths or coordinate labels."""


class EmptySubset(GmError):
    """A coordinate subset that must be nonempty was empty."""


class UnknownCoordinate(GmError):
    """A coordinate label or index does not exist."""


class ZeroColumn(GmError):
    """A parity-check matrix has a column with no ones."""


class InconsistentExtension(GmError):
    """A parity-check matrix does not annihilate the extended code it claims to check."""


class AlistFormatError(GmError):
    """An alist file is malformed or internally inconsistent."""


class GmfFormatError(GmError):
    """A model file is malformed."""


class TraceFormatError(GmError):
    """A trace file is malformed or cannot be replayed."""


class InvalidModel(GmError):
    """A graphical model violates a structural invariant."""


class Disconnected(InvalidModel):
    """The constraint graph of a model is not connected."""


class CapExceeded(CapError):
    """A behavior or enumeration would exceed the configured dimension cap."""

    def __init__(self, message: str, estimate: int | None = None) -> None:
        super().__init__(message)
        self.estimate = estimate


class TooLarge(CapError):
    """An exhaustive oracle was asked to enumerate more than it supports."""


class TooLargeLocalCode(CapError):
    """A local code is too large for exact soft-in soft-out enumeration."""


class UnknownConstraint(GmError):
    """A constraint identifier does not exist in the model."""


class InvalidPartition(GmError):
    """A split partition does not cover the constraint's variables correctly."""


class NotSplittable(GmError):
    """No pair of constraints with the requested supports intersects to the original."""


class NotARepetition(GmError):
    """The constraint is not a degree-2 repetition on equal-size variables."""


class NotTrivial(GmError):
    """The constraint still has bound variables."""


class NotIsolated(GmError):
    """The partial-parity constraint is not isolated."""


class NotInternal(GmError):
    """The constraint touches a visible variable."""


class NotDetermined(GmError):
    """A hidden variable is not a function of the visible variables."""


class NotCycleFree(GmError):
    """The operation requires a cycle-free model."""


class NotBipartite(GmError):
    """The constraint graph is not a simple bipartite graph."""


class UnknownFixture(GmError):
    """No built-in code is registered under the requested name."""


class ZeroRowProduced(GmError):
    """A row operation would produce an all-zero parity-check row."""


class ExtractionStalled(GmError):
    """A greedy extraction could make no further progress while its goal was unmet."""
