"""Brute-force statevector reference used as ground truth at small N.

Everything here is deliberately naive: it enumerates all 4^N Pauli strings
and never looks at tensor-network structure.  Qubit 0 is the most
significant bit of a basis index, matching :func:`mpsstab.mps.to_dense`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .clifford import PAULI_MATRICES, CliffordCircuit, Gate
from .errors import CapacityError, ValidationError
from .mps import MpsState, to_dense
from .pauli import PauliString, Tableau

ENUMERATION_LIMIT = 10
STATEVECTOR_LIMIT = 14


@dataclass
class DenseState:
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amp = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        n = amp.size.bit_length() - 1
        if amp.size != 1 << n:
            raise ValidationError("amplitude count must be a power of two")
        if abs(np.linalg.norm(amp) - 1.0) > 1e-12:
            raise ValidationError("dense state must have unit norm")
        self.amplitudes = amp

    @property
    def n(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @classmethod
    def from_mps(cls, state: MpsState) -> DenseState:
        amp = to_dense(state, STATEVECTOR_LIMIT)
        return cls(amp / np.linalg.norm(amp))

    @classmethod
    def zero(cls, n: int) -> DenseState:
        amp = np.zeros(1 << n, dtype=complex)
        amp[0] = 1.0
        return cls(amp)


def _as_dense(state: DenseState | MpsState | np.ndarray) -> DenseState:
    if isinstance(state, DenseState):
        return state
    if isinstance(state, MpsState):
        return DenseState.from_mps(state)
    return DenseState(state)


def apply_dense(amplitudes: np.ndarray, u: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Apply a gate to arbitrary (not necessarily adjacent) qubits."""
    n = amplitudes.size.bit_length() - 1
    k = len(qubits)
    psi = amplitudes.reshape((2,) * n)
    op = np.asarray(u, dtype=complex).reshape((2,) * (2 * k))
    psi = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), list(qubits)))
    psi = np.moveaxis(psi, list(range(k)), list(qubits))
    return psi.reshape(-1)


def simulate(amplitudes: np.ndarray, gates: CliffordCircuit | Iterable) -> np.ndarray:
    """Gate-by-gate dense evolution; items as accepted by ``mps.apply_gates``."""
    psi = np.asarray(amplitudes, dtype=complex)
    for g in gates:
        if isinstance(g, Gate):
            psi = apply_dense(psi, g.unitary, g.qubits)
        else:
            u, qubits = g
            psi = apply_dense(psi, u, tuple(qubits))
    return psi


def dense_expectation(state: DenseState | np.ndarray, p: PauliString) -> float:
    psi = _as_dense(state).amplitudes
    phi = psi
    for q, c in enumerate(p.codes):
        if c:
            phi = apply_dense(phi, PAULI_MATRICES[c], (q,))
    return float(np.vdot(psi, phi).real)


def _codes_index(n: int) -> np.ndarray:
    """Map (x-mask, z-mask) pairs to flat Pauli indices sum_j code_j 4^(N-1-j)."""
    xs = np.arange(1 << n)
    bits = (xs[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1  # qubit j bit
    xb = bits[:, None, :]
    zb = bits[None, :, :]
    code = np.where(xb & zb, 2, np.where(xb, 1, np.where(zb, 3, 0)))
    weights = 4 ** np.arange(n - 1, -1, -1)
    return (code * weights).sum(axis=2)


def _walsh_hadamard(f: np.ndarray, n: int) -> np.ndarray:
    """sum_s f[..., s] (-1)^(z.s) for every z along the last axis."""
    lead = f.shape[:-1]
    g = f.reshape(lead + (2,) * n)
    for ax in range(n):
        axis = len(lead) + ax
        a = np.take(g, 0, axis=axis)
        b = np.take(g, 1, axis=axis)
        g = np.stack([a + b, a - b], axis=axis)
    return g.reshape(lead + (1 << n,))


def all_pauli_expectations(state: DenseState | MpsState | np.ndarray) -> np.ndarray:
    """<sigma> for all 4^N strings, flat index sum_j code_j 4^(N-1-j)."""
    dense = _as_dense(state)
    n = dense.n
    if n > ENUMERATION_LIMIT:
        raise CapacityError(f"{n} qubits exceed the enumeration limit {ENUMERATION_LIMIT}")
    psi = dense.amplitudes
    s = np.arange(1 << n)
    # <psi| X^x Z^z |psi> = sum_s conj(psi[s ^ x]) psi[s] (-1)^(z.s)
    f = psi.conj()[s[None, :] ^ s[:, None]] * psi[None, :]
    vals = _walsh_hadamard(f, n)  # (x, z)
    # Hermitian string = i^{|x & z|} X^x Z^z
    vals = vals * (1j ** (_popcount_and(n) % 4))
    out = np.empty(4**n)
    out[_codes_index(n).reshape(-1)] = vals.real.reshape(-1)
    return out


def _popcount_and(n: int) -> np.ndarray:
    s = np.arange(1 << n, dtype=np.int64)
    m = s[:, None] & s[None, :]
    count = np.zeros_like(m)
    for b in range(n):
        count += (m >> b) & 1
    return count


def exact_pauli_distribution(state: DenseState | MpsState | np.ndarray) -> np.ndarray:
    """Pi(sigma) = <sigma>^2 / 2^N for all 4^N strings (flat, see above)."""
    vals = all_pauli_expectations(state)
    n = (vals.size.bit_length() - 1) // 2
    return vals**2 / 2**n


def index_to_codes(index: int, n: int) -> tuple[int, ...]:
    return tuple((index >> (2 * (n - 1 - j))) & 3 for j in range(n))


def codes_to_index(codes: Sequence[int]) -> int:
    out = 0
    for c in codes:
        out = 4 * out + int(c)
    return out


def exact_partial_probability(state: DenseState | MpsState | np.ndarray, prefix: Sequence[int],
                              distribution: np.ndarray | None = None) -> float:
    """Marginal of Pi over every completion of ``prefix`` on the remaining sites."""
    dist = exact_pauli_distribution(state) if distribution is None else distribution
    n = (dist.size.bit_length() - 1) // 2
    i = len(prefix)
    if i > n:
        raise ValidationError("prefix longer than the system")
    return float(dist.reshape(4**i, 4 ** (n - i))[codes_to_index(prefix)].sum())


def prefix_marginals(distribution: np.ndarray, i: int) -> np.ndarray:
    """All 4^i prefix marginals at once."""
    n = (distribution.size.bit_length() - 1) // 2
    return distribution.reshape(4**i, 4 ** (n - i)).sum(axis=1)


def stabilizer_strings(state: DenseState | MpsState | np.ndarray, tol: float = 1e-8) -> list[PauliString]:
    """Every signed string with |<sigma>| >= 1 - tol."""
    vals = all_pauli_expectations(state)
    n = (vals.size.bit_length() - 1) // 2
    hits = np.flatnonzero(np.abs(vals) >= 1 - tol)
    return [PauliString(index_to_codes(int(k), n), 1 if vals[k] > 0 else -1) for k in hits]


def exact_stabilizer_group(state: DenseState | MpsState | np.ndarray, tol: float = 1e-8) -> Tableau:
    """Reduced signed generators of the full stabilizer group."""
    strings = stabilizer_strings(state, tol)
    n = strings[0].n
    t = Tableau(n, signed=True).reduce()
    for p in strings:
        t.add(p)
    if len(strings) != 2**t.rank:
        raise AssertionError(f"{len(strings)} stabilizers do not form a group of rank {t.rank}")
    return t


def exact_stabilizer_rank(state: DenseState | MpsState | np.ndarray, tol: float = 1e-8) -> int:
    vals = all_pauli_expectations(state)
    count = int(np.sum(np.abs(vals) >= 1 - tol))
    return count.bit_length() - 1
