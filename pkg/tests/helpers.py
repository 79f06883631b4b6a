"""Dense-matrix references shared by the unit tests."""

from functools import reduce

import numpy as np

from mpsstab.clifford import PAULI_MATRICES
from mpsstab.pauli import PauliString


def pauli_matrix(p: PauliString) -> np.ndarray:
    """Full 2^N x 2^N matrix, qubit 0 most significant, sign included."""
    m = reduce(np.kron, [PAULI_MATRICES[c] for c in p.codes], np.eye(1))
    return m * (p.sign or 1)


def random_codes(rng: np.random.Generator, n: int) -> tuple[int, ...]:
    return tuple(int(c) for c in rng.integers(4, size=n))
