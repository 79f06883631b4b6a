"""Clifford gates, circuits, and their conjugation action on Pauli strings.

Every gate carries a dense unitary, and its action on Pauli strings is a
lookup table derived from that same unitary.  MPS evolution and tableau
conjugation therefore can never disagree about signs.

Two-qubit tables are indexed by ``4 * a + b`` where ``a`` and ``b`` are the
Pauli codes on the gate's first and second listed qubit; the first listed
qubit is the most significant tensor factor of the unitary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .pauli import PauliString

SQRT2 = np.sqrt(2.0)

PAULI_MATRICES = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

H = np.array([[1, 1], [1, -1]], dtype=complex) / SQRT2
S = np.diag([1, 1j]).astype(complex)
SDG = S.conj().T
T = np.diag([1, np.exp(1j * np.pi / 4)]).astype(complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)

TWO_QUBIT_CLIFFORD_ORDER = 11520
ONE_QUBIT_GATES = ("H", "S", "SDG")
TWO_QUBIT_GATES = ("CNOT", "C2")


@dataclass(frozen=True)
class Gate:
    """One gate of a Clifford circuit.

    ``name`` is one of ``H``, ``S``, ``SDG`` (single qubit), ``CNOT`` with
    ``qubits = (control, target)``, or ``C2`` for the two-qubit Clifford
    group element number ``index`` acting on ``qubits``.
    """

    name: str
    qubits: tuple[int, ...]
    index: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.name in ONE_QUBIT_GATES:
            if len(self.qubits) != 1:
                raise ValidationError(f"{self.name} acts on one qubit")
        elif self.name in TWO_QUBIT_GATES:
            if len(self.qubits) != 2 or abs(self.qubits[0] - self.qubits[1]) != 1:
                raise ValidationError(f"{self.name} must act on an adjacent pair, got {self.qubits}")
            if self.name == "C2" and not (
                self.index is not None and 0 <= self.index < TWO_QUBIT_CLIFFORD_ORDER
            ):
                raise ValidationError(f"C2 index must lie in [0, {TWO_QUBIT_CLIFFORD_ORDER})")
        else:
            raise ValidationError(f"unknown gate {self.name!r}")

    @property
    def unitary(self) -> np.ndarray:
        return gate_unitary(self)

    def __str__(self) -> str:
        args = ",".join(str(q) for q in self.qubits)
        return f"{self.name}[{self.index}]({args})" if self.name == "C2" else f"{self.name}({args})"


@dataclass
class CliffordCircuit:
    """Ordered gate list on ``n`` qubits; gates are applied first to last."""

    n: int
    gates: list[Gate] = field(default_factory=list)
    depth: int = 0

    def __post_init__(self) -> None:
        for g in self.gates:
            if any(q < 0 or q >= self.n for q in g.qubits):
                raise ValidationError(f"{g} out of range for {self.n} qubits")

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def then(self, other: CliffordCircuit) -> CliffordCircuit:
        """Circuit applying ``self`` first and ``other`` afterwards."""
        if other.n != self.n:
            raise ValidationError("circuit widths differ")
        return CliffordCircuit(self.n, self.gates + other.gates, self.depth + other.depth)


def gate_unitary(g: Gate) -> np.ndarray:
    """Dense unitary of ``g`` in the order of ``g.qubits``."""
    if g.name == "H":
        return H
    if g.name == "S":
        return S
    if g.name == "SDG":
        return SDG
    if g.name == "CNOT":
        return CNOT
    return two_qubit_clifford_group()[0][g.index]


# -- conjugation tables --------------------------------------------------------


def _pauli_basis(nq: int) -> np.ndarray:
    if nq == 1:
        return PAULI_MATRICES
    return np.array([np.kron(a, b) for a in PAULI_MATRICES for b in PAULI_MATRICES])


def conjugation_table(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Tables ``(codes, signs)`` with ``u P_k u^dag = signs[k] * P_codes[k]``.

    ``u`` may be a single 2x2/4x4 unitary or a stack of them.
    """
    u = np.asarray(u, dtype=complex)
    single = u.ndim == 2
    if single:
        u = u[None]
    nq = 1 if u.shape[-1] == 2 else 2
    basis = _pauli_basis(nq)
    dim = u.shape[-1]
    conj = u[:, None] @ basis[None] @ u.conj().transpose(0, 2, 1)[:, None]
    dual = basis.transpose(0, 2, 1).reshape(len(basis), dim * dim)
    coeff = (conj.reshape(len(u), len(basis), dim * dim) @ dual.T).real / dim
    codes = np.argmax(np.abs(coeff), axis=2)
    signs = np.take_along_axis(coeff, codes[..., None], axis=2)[..., 0]
    if not np.allclose(np.abs(signs), 1.0, atol=1e-9):
        raise ValidationError("matrix is not a Clifford unitary")
    codes = codes.astype(np.int8)
    signs = np.rint(signs).astype(np.int8)
    return (codes[0], signs[0]) if single else (codes, signs)


def invert_table(codes: np.ndarray, signs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Table of u^dag . u from the table of u . u^dag."""
    inv_codes = np.empty_like(codes)
    inv_signs = np.empty_like(signs)
    inv_codes[codes] = np.arange(codes.size, dtype=codes.dtype)
    inv_signs[codes] = signs
    return inv_codes, inv_signs


@lru_cache(maxsize=None)
def _fixed_table(name: str, inverse: bool) -> tuple[np.ndarray, np.ndarray]:
    table = conjugation_table({"H": H, "S": S, "SDG": SDG, "CNOT": CNOT}[name])
    return invert_table(*table) if inverse else table


def gate_table(g: Gate, inverse: bool = False) -> tuple[np.ndarray, np.ndarray]:
    if g.name == "C2":
        _, codes, signs = two_qubit_clifford_group()
        c, s = codes[g.index], signs[g.index]
        return invert_table(c, s) if inverse else (c, s)
    return _fixed_table(g.name, inverse)


def conjugate_codes(
    codes: np.ndarray,
    signs: np.ndarray,
    circuit: CliffordCircuit | Sequence[Gate],
    inverse: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Batched conjugation of a (K, N) code array with (K,) signs.

    Computes U P U^dag, or U^dag P U when ``inverse`` is set.
    """
    codes = np.array(codes, dtype=np.int8, copy=True)
    signs = np.array(signs, dtype=np.int8, copy=True)
    gates = list(circuit)
    if inverse:
        gates = gates[::-1]
    for g in gates:
        tc, ts = gate_table(g, inverse)
        if len(g.qubits) == 1:
            (q,) = g.qubits
            idx = codes[:, q].astype(np.intp)
            codes[:, q] = tc[idx]
        else:
            a, b = g.qubits
            idx = 4 * codes[:, a].astype(np.intp) + codes[:, b]
            new = tc[idx]
            codes[:, a] = new // 4
            codes[:, b] = new % 4
        signs *= ts[idx]
    return codes, signs


def conjugate(p: PauliString, circuit: CliffordCircuit | Sequence[Gate],
              inverse: bool = False) -> PauliString:
    """U p U^dag (or U^dag p U with ``inverse``), sign included.

    An unsigned input is treated as ``+`` for the computation and the result
    is returned unsigned.
    """
    if isinstance(circuit, CliffordCircuit) and circuit.n != p.n:
        raise ValidationError(f"circuit width {circuit.n} != Pauli length {p.n}")
    codes, signs = conjugate_codes(
        np.asarray([p.codes], dtype=np.int8), np.array([p.sign or 1]), circuit, inverse
    )
    return PauliString(tuple(codes[0]), None if p.sign is None else int(signs[0]))


# -- two-qubit Clifford group ----------------------------------------------------


def _phase_key(u: np.ndarray) -> bytes:
    flat = u.ravel()
    k = int(np.argmax(np.abs(flat) > 1e-6))
    v = flat * (abs(flat[k]) / flat[k])
    # + 0.0 folds -0.0 into 0.0 so equal matrices hash equally
    return (np.round(v, 6) + 0.0).tobytes()


@lru_cache(maxsize=1)
def two_qubit_clifford_group() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Enumerate the 11520 two-qubit Cliffords modulo global phase.

    Elements are listed in breadth-first order from the identity over the
    generators H x I, I x H, S x I, I x S, CNOT, which fixes a deterministic
    index for each one.  Returns ``(unitaries, table_codes, table_signs)``.
    """
    eye = np.eye(2, dtype=complex)
    gens = [np.kron(H, eye), np.kron(eye, H), np.kron(S, eye), np.kron(eye, S), CNOT]
    elems = [np.eye(4, dtype=complex)]
    seen = {_phase_key(elems[0])}
    head = 0
    while head < len(elems) <= TWO_QUBIT_CLIFFORD_ORDER:
        u = elems[head]
        head += 1
        for g in gens:
            v = g @ u
            key = _phase_key(v)
            if key not in seen:
                seen.add(key)
                elems.append(v)
    if len(elems) != TWO_QUBIT_CLIFFORD_ORDER:
        raise AssertionError(f"enumerated {len(elems)} two-qubit Cliffords")
    unitaries = np.array(elems)
    unitaries.setflags(write=False)
    codes, signs = conjugation_table(unitaries)
    codes.setflags(write=False)
    signs.setflags(write=False)
    return unitaries, codes, signs


# -- random circuits ---------------------------------------------------------------


def generator_layer(n: int, rng: np.random.Generator) -> list[Gate]:
    """One layer of gates drawn uniformly from {H, S, CNOT} position by position.

    A CNOT occupies the current qubit and its right neighbour with a random
    orientation; the last qubit can only receive H or S.
    """
    gates: list[Gate] = []
    q = 0
    while q < n:
        choice = int(rng.integers(3)) if q < n - 1 else int(rng.integers(2))
        if choice == 0:
            gates.append(Gate("H", (q,)))
            q += 1
        elif choice == 1:
            gates.append(Gate("S", (q,)))
            q += 1
        else:
            pair = (q, q + 1) if rng.integers(2) == 0 else (q + 1, q)
            gates.append(Gate("CNOT", pair))
            q += 2
    return gates


def staircase_layer(n: int, rng: np.random.Generator) -> list[Gate]:
    """Uniform two-qubit Cliffords on (0,1), (1,2), ..., (n-2, n-1) in order."""
    idx = rng.integers(TWO_QUBIT_CLIFFORD_ORDER, size=max(n - 1, 0))
    return [Gate("C2", (q, q + 1), int(idx[q])) for q in range(n - 1)]


def random_clifford_circuit(
    n: int,
    depth: int,
    geometry: str = "generator_layers",
    seed: int | np.random.Generator | np.random.SeedSequence | None = None,
) -> CliffordCircuit:
    """Random circuit of ``depth`` layers, deterministic for a fixed seed."""
    if n < 1 or depth < 0:
        raise ValidationError("need n >= 1 and depth >= 0")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    layer = {"generator_layers": generator_layer, "staircase_uniform": staircase_layer}.get(geometry)
    if layer is None:
        raise ValidationError(f"unknown geometry {geometry!r}")
    gates: list[Gate] = []
    for _ in range(depth):
        gates.extend(layer(n, rng))
    return CliffordCircuit(n, gates, depth)


def circuit_from_gates(n: int, gates: Iterable[Gate]) -> CliffordCircuit:
    return CliffordCircuit(n, list(gates), 0)
