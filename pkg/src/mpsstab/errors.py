"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class MpsStabError(Exception):
    """Base class for all errors raised by mpsstab."""


class ValidationError(MpsStabError, ValueError):
    """Rejected input: wrong shape, non-unitary gate, unnormalized vector, ..."""


class DegenerateStateError(MpsStabError):
    """The state has zero norm and cannot be normalized."""


class CapacityError(MpsStabError):
    """A configured size limit was exceeded (bond dimension, oracle qubits).

    ``partial`` optionally carries whatever result was assembled before the
    limit was hit.
    """

    def __init__(self, message: str, partial: object | None = None) -> None:
        super().__init__(message)
        self.partial = partial


class NumericalConsistencyError(MpsStabError):
    """A quantity that is exact in theory drifted beyond its tolerance."""


class InconsistencyError(MpsStabError):
    """A Pauli string contradicts the stabilizer group it was inserted into."""


class InvariantViolationError(MpsStabError):
    """An invariant that holds for every valid input was broken."""


class StaleRowError(MpsStabError):
    """A tableau row no longer stabilizes the state it is checked against."""
