"""Matrix product states: construction, gauges, gate application, Pauli expectations.

Site tensors have shape ``(chi_left, 2, chi_right)`` with boundary bonds of
dimension 1.  A state in right gauge satisfies ``sum_s A^s A^s^dag = 1`` on
every site, so the whole norm sits on the first tensor; left gauge is the
mirror image.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from .clifford import PAULI_MATRICES, SWAP, CliffordCircuit, Gate
from .errors import (
    CapacityError,
    DegenerateStateError,
    NumericalConsistencyError,
    ValidationError,
)
from .pauli import PauliString

GAUGES = ("right", "left", "none")
DENSE_LIMIT = 14
GAUGE_TOL = 1e-10
MAGIC = b"MPS1"


@dataclass
class TruncationConfig:
    """SVD truncation after two-site gates.

    Singular values below ``cutoff`` times the largest one are dropped, and
    at most ``max_bond`` are kept when it is set.
    """

    cutoff: float = 1e-12
    max_bond: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.cutoff < 1.0:
            raise ValidationError(f"cutoff must lie in [0, 1), got {self.cutoff}")
        if self.max_bond is not None and self.max_bond < 1:
            raise ValidationError("max_bond must be >= 1")


@dataclass
class MpsState:
    tensors: list[np.ndarray]
    gauge: str = "none"
    discarded_weight: float = field(default=0.0, compare=False)

    def __post_init__(self) -> None:
        if self.gauge not in GAUGES:
            raise ValidationError(f"gauge must be one of {GAUGES}")
        if not self.tensors:
            raise ValidationError("an MPS needs at least one site")
        self.tensors = [np.asarray(t, dtype=complex) for t in self.tensors]
        prev = 1
        for i, t in enumerate(self.tensors):
            if t.ndim != 3 or t.shape[1] != 2 or t.shape[0] != prev:
                raise ValidationError(f"site {i}: bad tensor shape {t.shape}")
            prev = t.shape[2]
        if prev != 1:
            raise ValidationError("right boundary bond must be 1")

    @property
    def n(self) -> int:
        return len(self.tensors)

    @property
    def bond_profile(self) -> list[int]:
        """[chi_0, chi_1, ..., chi_N] with chi_0 = chi_N = 1."""
        return [1] + [t.shape[2] for t in self.tensors]

    @property
    def max_bond(self) -> int:
        return max(self.bond_profile)

    def copy(self) -> MpsState:
        return MpsState([t.copy() for t in self.tensors], self.gauge, self.discarded_weight)

    def norm(self) -> float:
        env = np.ones((1, 1), dtype=complex)
        for a in self.tensors:
            env = np.einsum("ab,asc,bsd->cd", env, a.conj(), a)
        return float(np.sqrt(abs(env[0, 0])))


# -- construction -------------------------------------------------------------------


def from_product_state(local_vectors: Sequence[Sequence[complex]]) -> MpsState:
    """Bond-dimension-one MPS of a product of normalized qubit states."""
    tensors = []
    for i, v in enumerate(local_vectors):
        v = np.asarray(v, dtype=complex)
        if v.shape != (2,):
            raise ValidationError(f"site {i}: local vector must have 2 entries")
        if abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise ValidationError(f"site {i}: local vector is not normalized")
        tensors.append(v.reshape(1, 2, 1))
    return MpsState(tensors, "right")


def zero_state(n: int) -> MpsState:
    return from_product_state([(1.0, 0.0)] * n)


def random_mps(n: int, chi: int, seed: int | np.random.Generator | None = None) -> MpsState:
    """Random right-normalized MPS with bonds min(chi, 2^i, 2^(n-i))."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    bonds = [min(chi, 2 ** min(i, n - i)) for i in range(n + 1)]
    tensors = [
        rng.normal(size=(bonds[i], 2, bonds[i + 1])) + 1j * rng.normal(size=(bonds[i], 2, bonds[i + 1]))
        for i in range(n)
    ]
    return right_normalize(MpsState(tensors))


# -- gauges ---------------------------------------------------------------------------


def _left_qr(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """a = q @ r with q left-orthonormal, shaped like a."""
    chl, d, chr_ = a.shape
    q, r = np.linalg.qr(a.reshape(chl * d, chr_))
    return q.reshape(chl, d, q.shape[1]), r


def _right_lq(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """a = l @ q with q right-orthonormal, shaped like a."""
    chl, d, chr_ = a.shape
    q, r = np.linalg.qr(a.reshape(chl, d * chr_).conj().T)
    return q.conj().T.reshape(q.shape[1], d, chr_), r.conj().T


def _shift_center(tensors: list[np.ndarray], center: int, target: int) -> None:
    """Move the orthogonality center in place from ``center`` to ``target``."""
    for j in range(center, target):
        tensors[j], r = _left_qr(tensors[j])
        tensors[j + 1] = np.einsum("ab,bsc->asc", r, tensors[j + 1])
    for j in range(center, target, -1):
        tensors[j], l = _right_lq(tensors[j])
        tensors[j - 1] = np.einsum("asb,bc->asc", tensors[j - 1], l)


def _normalize_site(tensors: list[np.ndarray], site: int) -> float:
    nrm = float(np.linalg.norm(tensors[site]))
    if not np.isfinite(nrm) or nrm < 1e-300:
        raise DegenerateStateError("state has zero norm")
    tensors[site] = tensors[site] / nrm
    return nrm


def _check_finite(state: MpsState) -> None:
    if not all(np.all(np.isfinite(t)) for t in state.tensors):
        raise ValidationError("MPS tensors must be finite")


def right_normalize(state: MpsState) -> MpsState:
    """Gauge-equivalent state, normalized, with every site right-orthonormal."""
    _check_finite(state)
    tensors = [t.copy() for t in state.tensors]
    _shift_center(tensors, state.n - 1, 0)
    _normalize_site(tensors, 0)
    return MpsState(tensors, "right", state.discarded_weight)


def left_normalize(state: MpsState) -> MpsState:
    """Gauge-equivalent state, normalized, with every site left-orthonormal."""
    _check_finite(state)
    tensors = [t.copy() for t in state.tensors]
    _shift_center(tensors, 0, state.n - 1)
    _normalize_site(tensors, state.n - 1)
    return MpsState(tensors, "left", state.discarded_weight)


def gauge_deviation(state: MpsState, gauge: str) -> float:
    """Largest entry-wise deviation from the gauge identity over all sites."""
    worst = 0.0
    for a in state.tensors:
        if gauge == "right":
            m = np.einsum("asb,csb->ac", a, a.conj())
        else:
            m = np.einsum("asb,asc->bc", a.conj(), a)
        worst = max(worst, float(np.max(np.abs(m - np.eye(m.shape[0])))))
    return worst


def mirror(state: MpsState) -> MpsState:
    """Same state with the site order reversed (qubit j becomes N-1-j)."""
    tensors = [t.transpose(2, 1, 0).copy() for t in reversed(state.tensors)]
    gauge = {"right": "left", "left": "right"}.get(state.gauge, "none")
    return MpsState(tensors, gauge, state.discarded_weight)


# -- gates ------------------------------------------------------------------------------


def _check_unitary(u: np.ndarray, dim: int) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (dim, dim):
        raise ValidationError(f"gate must be {dim}x{dim}, got {u.shape}")
    if np.max(np.abs(u @ u.conj().T - np.eye(dim))) > 1e-10:
        raise ValidationError("gate is not unitary")
    return u


def _svd_split(theta: np.ndarray, trunc: TruncationConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    chl, _, _, chr_ = theta.shape
    try:
        u, s, vh = np.linalg.svd(theta.reshape(chl * 2, 2 * chr_), full_matrices=False)
    except np.linalg.LinAlgError:
        from scipy.linalg import svd

        u, s, vh = svd(theta.reshape(chl * 2, 2 * chr_), full_matrices=False, lapack_driver="gesvd")
    if s[0] <= 0:
        raise DegenerateStateError("two-site block vanished")
    keep = int(np.sum(s > trunc.cutoff * s[0]))
    if trunc.max_bond is not None:
        keep = min(keep, trunc.max_bond)
    keep = max(keep, 1)
    total = float(np.sum(s**2))
    discarded = float(np.sum(s[keep:] ** 2)) / total
    s = s[:keep]
    return u[:, :keep].reshape(chl, 2, keep), s, vh[:keep].reshape(keep, 2, chr_), discarded


def _two_site(tensors: list[np.ndarray], site: int, u: np.ndarray, trunc: TruncationConfig,
              center: int | None) -> tuple[float, int | None]:
    """Apply ``u`` on (site, site+1).

    With a center at ``site`` the result keeps a canonical center at
    ``site + 1`` and the state norm is restored after truncation.
    """
    theta = np.einsum("asb,btc->astc", tensors[site], tensors[site + 1])
    theta = np.einsum("xyst,astc->axyc", u.reshape(2, 2, 2, 2), theta)
    left, s, right, discarded = _svd_split(theta, trunc)
    if center is None:
        tensors[site] = left * s[None, None, :]
        tensors[site + 1] = right
        return discarded, None
    s = s / np.linalg.norm(s)
    tensors[site] = left
    tensors[site + 1] = np.einsum("a,asb->asb", s, right)
    return discarded, site + 1


def _ops_from_gates(gates: Iterable) -> Iterable[tuple[np.ndarray, tuple[int, ...]]]:
    for g in gates:
        if isinstance(g, Gate):
            u, qubits = g.unitary, g.qubits
        else:
            u, qubits = g
            qubits = tuple(qubits)
        if len(qubits) == 2 and qubits[0] > qubits[1]:
            u = SWAP @ u @ SWAP
            qubits = (qubits[1], qubits[0])
        yield u, qubits


def apply_gates(
    state: MpsState,
    gates: CliffordCircuit | Iterable[Gate | tuple[np.ndarray, Sequence[int]]],
    trunc: TruncationConfig | None = None,
    bond_cap: int | None = None,
) -> MpsState:
    """Apply a sequence of one- and two-qubit gates.

    Items are :class:`Gate` objects or ``(unitary, qubits)`` pairs, so
    non-Clifford gates such as T can be mixed in.  Two-qubit gates must act
    on adjacent sites.  Canonical states keep an orthogonality center that
    follows the gates, so truncation always happens in a Schmidt basis; the
    declared gauge is restored at the end.
    """
    trunc = trunc or TruncationConfig()
    tensors = [t.copy() for t in state.tensors]
    n = len(tensors)
    center = {"right": 0, "left": n - 1}.get(state.gauge)
    discarded = state.discarded_weight
    for u, qubits in _ops_from_gates(gates):
        if any(q < 0 or q >= n for q in qubits):
            raise ValidationError(f"gate on {qubits} out of range for {n} sites")
        if len(qubits) == 1:
            u = _check_unitary(u, 2)
            (q,) = qubits
            tensors[q] = np.einsum("ts,asb->atb", u, tensors[q])
            continue
        if len(qubits) != 2 or qubits[1] != qubits[0] + 1:
            raise ValidationError(f"two-qubit gates need adjacent sites, got {qubits}")
        u = _check_unitary(u, 4)
        site = qubits[0]
        if center is not None:
            _shift_center(tensors, center, site)
        dw, center = _two_site(tensors, site, u, trunc, None if center is None else site)
        discarded += dw
        chi = tensors[site].shape[2]
        if bond_cap is not None and chi > bond_cap:
            raise CapacityError(f"bond dimension {chi} exceeds cap {bond_cap}")
    if state.gauge == "right":
        _shift_center(tensors, center, 0)
        _normalize_site(tensors, 0)
    elif state.gauge == "left":
        _shift_center(tensors, center, n - 1)
        _normalize_site(tensors, n - 1)
    return MpsState(tensors, state.gauge, discarded)


def apply_single_qubit_gate(state: MpsState, site: int, gate: np.ndarray) -> MpsState:
    return apply_gates(state, [(gate, (site,))])


def apply_two_qubit_gate(state: MpsState, site: int, gate: np.ndarray,
                         trunc: TruncationConfig | None = None) -> MpsState:
    """Apply a 4x4 gate on (site, site+1); ``site`` is the most significant qubit."""
    return apply_gates(state, [(gate, (site, site + 1))], trunc)


def apply_circuit(state: MpsState, circuit: CliffordCircuit, trunc: TruncationConfig | None = None,
                  bond_cap: int | None = None) -> MpsState:
    if circuit.n != state.n:
        raise ValidationError(f"circuit width {circuit.n} != MPS size {state.n}")
    return apply_gates(state, circuit.gates, trunc, bond_cap)


# -- observables --------------------------------------------------------------------------


def _transfer_batch(env: np.ndarray, a: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """E' = sum_{s's} w[s', s] A^{s'}^dag E A^s for a batch of environments.

    ``env`` is (K, chl, chl) and ``weights`` is (K, 2, 2).
    """
    ad = a.conj().transpose(1, 2, 0)  # (s', chr, chl)
    out = None
    for s in range(2):
        b = env @ a[:, s, :]  # (K, chl, chr)
        for sp in range(2):
            w = weights[:, sp, s]
            if not np.any(w):
                continue
            term = w[:, None, None] * (ad[sp] @ b)
            out = term if out is None else out + term
    if out is None:
        out = np.zeros((env.shape[0], a.shape[2], a.shape[2]), dtype=complex)
    return out


def expectation_paulis(state: MpsState, codes: np.ndarray) -> np.ndarray:
    """<psi|P_k|psi> for every row of a (K, N) Pauli code array."""
    codes = np.asarray(codes)
    if codes.ndim != 2 or codes.shape[1] != state.n:
        raise ValidationError(f"codes must have shape (K, {state.n})")
    k = codes.shape[0]
    env = np.ones((k, 1, 1), dtype=complex)
    for j, a in enumerate(state.tensors):
        env = _transfer_batch(env, a, PAULI_MATRICES[codes[:, j]])
    vals = env[:, 0, 0]
    if state.gauge == "none":
        vals = vals / state.norm() ** 2
    if k and np.max(np.abs(vals.imag)) > 1e-8:
        raise NumericalConsistencyError(
            f"Pauli expectation has imaginary part {np.max(np.abs(vals.imag)):.2e}")
    return vals.real


def expectation_pauli(state: MpsState, p: PauliString) -> float:
    if p.n != state.n:
        raise ValidationError(f"Pauli length {p.n} != MPS size {state.n}")
    return float(expectation_paulis(state, np.asarray([p.codes]))[0])


def to_dense(state: MpsState, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Statevector with qubit 0 as the most significant bit."""
    if state.n > limit:
        raise CapacityError(f"{state.n} qubits exceed the dense limit {limit}")
    psi = state.tensors[0]
    for a in state.tensors[1:]:
        psi = np.tensordot(psi, a, axes=([psi.ndim - 1], [0]))
    return psi.reshape(-1)


# -- binary format ---------------------------------------------------------------------------


def write_mps(state: MpsState, target: str | Path | BinaryIO) -> None:
    """Serialize as magic, N, bond dims (int32 LE), then complex128 LE tensors."""
    payload = bytearray(MAGIC)
    payload += struct.pack("<i", state.n)
    payload += struct.pack(f"<{state.n + 1}i", *state.bond_profile)
    for t in state.tensors:
        payload += np.ascontiguousarray(t, dtype="<c16").tobytes()
    if hasattr(target, "write"):
        target.write(bytes(payload))
    else:
        Path(target).write_bytes(bytes(payload))


def read_mps(source: str | Path | BinaryIO) -> MpsState:
    data = source.read() if hasattr(source, "read") else Path(source).read_bytes()
    if data[:4] != MAGIC:
        raise ValidationError("not an MPS1 file")
    (n,) = struct.unpack_from("<i", data, 4)
    if n < 1:
        raise ValidationError(f"bad site count {n}")
    bonds = struct.unpack_from(f"<{n + 1}i", data, 8)
    off = 8 + 4 * (n + 1)
    tensors = []
    for i in range(n):
        shape = (bonds[i], 2, bonds[i + 1])
        size = int(np.prod(shape)) * 16
        if off + size > len(data):
            raise ValidationError("truncated MPS file")
        tensors.append(np.frombuffer(data, dtype="<c16", count=size // 16, offset=off).reshape(shape).copy())
        off += size
    if off != len(data):
        raise ValidationError("trailing bytes after MPS tensors")
    return MpsState(tensors, "none")
