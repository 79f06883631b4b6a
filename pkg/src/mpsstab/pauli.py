"""Pauli strings, their GF(2) encoding, and signed stabilizer tableaux.

A Pauli string on N qubits is stored as a tuple of codes in {0, 1, 2, 3}
for {I, X, Y, Z}.  Its GF(2) row has width 2N in (x|z) block layout with
the replacements I -> (0,0), X -> (1,0), Y -> (1,1), Z -> (0,1).  Inside a
:class:`Tableau` rows are packed into Python integers: bit ``j`` holds the
x-part of qubit ``j`` and bit ``N + j`` its z-part, so row additions are a
single XOR and phase bookkeeping reduces to popcounts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InconsistencyError, ValidationError

LABELS = "IXYZ"
_LABEL_TO_CODE = {c: i for i, c in enumerate(LABELS)}
_MINUS_SIGNS = ("-", "−")


@dataclass(frozen=True)
class PauliString:
    """Hermitian Pauli string with an optional sign.

    ``sign`` is ``+1``, ``-1``, or ``None`` when it has not been fixed
    (e.g. a raw sample that has not been checked against a state).
    """

    codes: tuple[int, ...]
    sign: int | None = None

    def __post_init__(self) -> None:
        codes = tuple(int(c) for c in self.codes)
        if any(c < 0 or c > 3 for c in codes):
            raise ValidationError(f"Pauli codes must lie in 0..3, got {codes}")
        if self.sign not in (None, 1, -1):
            raise ValidationError(f"sign must be +1, -1 or None, got {self.sign}")
        object.__setattr__(self, "codes", codes)

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        """Parse ``"+XZI"``, ``"-YY"`` or an unsigned ``"ZZ"``."""
        label = label.strip()
        sign = None
        if label[:1] == "+":
            sign, label = 1, label[1:]
        elif label[:1] in _MINUS_SIGNS:
            sign, label = -1, label[1:]
        try:
            codes = tuple(_LABEL_TO_CODE[c] for c in label.upper())
        except KeyError as exc:
            raise ValidationError(f"bad Pauli label {label!r}") from exc
        return cls(codes, sign)

    @classmethod
    def identity(cls, n: int) -> PauliString:
        return cls((0,) * n, 1)

    @property
    def n(self) -> int:
        return len(self.codes)

    @property
    def label(self) -> str:
        body = "".join(LABELS[c] for c in self.codes)
        if self.sign is None:
            return body
        return ("+" if self.sign > 0 else "-") + body

    def __str__(self) -> str:
        return self.label

    def with_sign(self, sign: int | None) -> PauliString:
        return PauliString(self.codes, sign)

    def unsigned(self) -> PauliString:
        return PauliString(self.codes, None)

    @property
    def row(self) -> int:
        """Packed (x|z) row."""
        return pack_codes(self.codes)

    @property
    def weight(self) -> int:
        return sum(1 for c in self.codes if c)


def pack_codes(codes: Sequence[int]) -> int:
    n = len(codes)
    x = z = 0
    for j, c in enumerate(codes):
        if c == 1 or c == 2:
            x |= 1 << j
        if c >= 2:
            z |= 1 << j
    return x | (z << n)


def unpack_row(row: int, n: int) -> tuple[int, ...]:
    mask = (1 << n) - 1
    x, z = row & mask, row >> n
    return tuple(_code((x >> j) & 1, (z >> j) & 1) for j in range(n))


def _code(xb: int, zb: int) -> int:
    # (x,z): (0,0)->I (1,0)->X (1,1)->Y (0,1)->Z
    return (0, 1, 3, 2)[xb + 2 * zb]


def pack_code_array(codes: np.ndarray) -> list[int]:
    """Pack a (K, N) integer code array into K row integers."""
    codes = np.asarray(codes)
    x = (codes == 1) | (codes == 2)
    z = codes >= 2
    bits = np.concatenate([x, z], axis=1).astype(np.uint8)
    packed = np.packbits(bits, axis=1, bitorder="little")
    return [int.from_bytes(r.tobytes(), "little") for r in packed]


def unpack_row_array(rows: Sequence[int], n: int) -> np.ndarray:
    """Inverse of :func:`pack_code_array`."""
    out = np.zeros((len(rows), n), dtype=np.int8)
    for k, r in enumerate(rows):
        out[k] = unpack_row(r, n)
    return out


def encode(p: PauliString) -> np.ndarray:
    """GF(2) row of ``p`` as a uint8 vector of length 2N, (x|z) layout."""
    codes = np.asarray(p.codes, dtype=np.int8)
    x = (codes == 1) | (codes == 2)
    z = codes >= 2
    return np.concatenate([x, z]).astype(np.uint8)


def decode(row: Sequence[int] | np.ndarray) -> PauliString:
    """Unsigned Pauli string of a (x|z) GF(2) row."""
    row = np.asarray(row, dtype=np.uint8)
    if row.ndim != 1 or row.size % 2:
        raise ValidationError("row must be a flat vector of even length")
    n = row.size // 2
    return PauliString(tuple(_code(int(row[j]), int(row[n + j])) for j in range(n)))


def symplectic_product(a: int | np.ndarray, b: int | np.ndarray, n: int | None = None) -> int:
    """0 if the two Pauli rows commute, 1 if they anticommute.

    Accepts either packed integer rows (``n`` required) or uint8 vectors.
    """
    if isinstance(a, (int, np.integer)) and isinstance(b, (int, np.integer)):
        if n is None:
            raise ValidationError("n is required for packed rows")
        mask = (1 << n) - 1
        a, b = int(a), int(b)
        return ((a & mask & (b >> n)).bit_count() + ((a >> n) & b & mask).bit_count()) & 1
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape or a.size % 2:
        raise ValidationError("rows must have equal, even width")
    h = a.size // 2
    return int((a[:h] @ b[h:] + a[h:] @ b[:h]) % 2)


def product_phase(a: int, b: int, n: int) -> int:
    """Exponent e (mod 4) with P_a P_b = i^e P_{a xor b} for Hermitian Paulis."""
    mask = (1 << n) - 1
    xa, za = a & mask, a >> n
    xb, zb = b & mask, b >> n
    c = a ^ b
    xc, zc = c & mask, c >> n
    return ((xa & za).bit_count() + (xb & zb).bit_count()
            + 2 * (za & xb).bit_count() - (xc & zc).bit_count()) % 4


def multiply(p: PauliString, q: PauliString) -> PauliString:
    """Product of two commuting signed Pauli strings."""
    n = p.n
    a, b = p.row, q.row
    e = product_phase(a, b, n)
    if e % 2:
        raise ValidationError(f"{p} and {q} anticommute; product is not Hermitian")
    sign = None
    if p.sign is not None and q.sign is not None:
        sign = p.sign * q.sign * (-1 if e == 2 else 1)
    return PauliString(unpack_row(a ^ b, n), sign)


def commutes(p: PauliString, q: PauliString) -> bool:
    return symplectic_product(p.row, q.row, p.n) == 0


@dataclass
class Tableau:
    """A K x 2N GF(2) matrix of Pauli rows with sign bits.

    ``signs[k]`` is 0 for ``+`` and 1 for ``-``.  When ``signed`` is False the
    sign column is carried along but never interpreted.  ``rank`` is set
    once the tableau has been reduced.
    """

    n: int
    rows: list[int] = field(default_factory=list)
    signs: list[int] = field(default_factory=list)
    signed: bool = True
    rank: int | None = None

    def __post_init__(self) -> None:
        if not self.signs:
            self.signs = [0] * len(self.rows)
        if len(self.signs) != len(self.rows):
            raise ValidationError("rows and signs must have the same length")

    @classmethod
    def from_paulis(cls, paulis: Iterable[PauliString], n: int | None = None,
                    signed: bool | None = None) -> Tableau:
        paulis = list(paulis)
        if n is None:
            if not paulis:
                raise ValidationError("n is required for an empty tableau")
            n = paulis[0].n
        if any(p.n != n for p in paulis):
            raise ValidationError("all Pauli strings must have length n")
        if signed is None:
            signed = all(p.sign is not None for p in paulis)
        rows = [p.row for p in paulis]
        signs = [1 if (p.sign or 1) < 0 else 0 for p in paulis]
        return cls(n, rows, signs, signed)

    def copy(self) -> Tableau:
        return Tableau(self.n, list(self.rows), list(self.signs), self.signed, self.rank)

    def __len__(self) -> int:
        return len(self.rows)

    def paulis(self) -> list[PauliString]:
        return [
            PauliString(unpack_row(r, self.n), (-1 if s else 1) if self.signed else None)
            for r, s in zip(self.rows, self.signs)
        ]

    def matrix(self) -> np.ndarray:
        """Dense (K, 2N) uint8 matrix view."""
        out = np.zeros((len(self.rows), 2 * self.n), dtype=np.uint8)
        for k, r in enumerate(self.rows):
            for c in range(2 * self.n):
                out[k, c] = (r >> c) & 1
        return out

    def pivots(self) -> list[int]:
        return [_pivot(r) for r in self.rows]

    def all_commute(self) -> bool:
        rows = self.rows
        return all(
            symplectic_product(rows[a], rows[b], self.n) == 0
            for a in range(len(rows)) for b in range(a + 1, len(rows))
        )

    # -- reduction ---------------------------------------------------------

    def _combine(self, a: int, sa: int, b: int, sb: int) -> tuple[int, int]:
        """Row a*b with its sign bit."""
        if not self.signed:
            return a ^ b, 0
        e = product_phase(a, b, self.n)
        if e % 2:
            raise InconsistencyError("signed elimination met anticommuting rows")
        return a ^ b, sa ^ sb ^ (e >> 1)

    def reduce_row(self, row: int, sign: int = 0) -> tuple[int, int]:
        """Reduce ``row`` against this (already reduced) tableau."""
        for r, s in zip(self.rows, self.signs):
            p = _pivot(r)
            if (row >> p) & 1:
                row, sign = self._combine(r, s, row, sign)
        return row, sign

    def _insert_reduced(self, row: int, sign: int) -> None:
        # keep full RREF: clear the new pivot from existing rows
        p = _pivot(row)
        for k, r in enumerate(self.rows):
            if (r >> p) & 1:
                self.rows[k], self.signs[k] = self._combine(r, self.signs[k], row, sign)
        pos = 0
        while pos < len(self.rows) and _pivot(self.rows[pos]) < p:
            pos += 1
        self.rows.insert(pos, row)
        self.signs.insert(pos, sign)
        self.rank = len(self.rows)

    def add(self, p: PauliString | int, sign: int | None = None, *,
            check_commute: bool = True) -> bool:
        """Insert one row into a reduced tableau; True if the rank grew.

        Raises :class:`InconsistencyError` when the row anticommutes with the
        group, or when a signed row is already present with the opposite sign.
        """
        if self.rank is None:
            self.reduce()
        if isinstance(p, PauliString):
            if p.n != self.n:
                raise ValidationError(f"width mismatch: {p.n} vs {self.n}")
            row, sbit = p.row, 1 if (p.sign or 1) < 0 else 0
        else:
            row, sbit = int(p), 1 if (sign or 1) < 0 else 0
        if check_commute:
            for r in self.rows:
                if symplectic_product(r, row, self.n):
                    raise InconsistencyError(
                        f"{PauliString(unpack_row(row, self.n))} anticommutes with the group")
        red, rs = self.reduce_row(row, sbit)
        if red == 0:
            if self.signed and rs:
                raise InconsistencyError(
                    f"{PauliString(unpack_row(row, self.n))} has the wrong sign for the group")
            return False
        self._insert_reduced(red, rs)
        return True

    def reduce(self) -> Tableau:
        """Gaussian elimination in place to reduced row-echelon form."""
        rows, signs = self.rows, self.signs
        self.rows, self.signs, self.rank = [], [], 0
        for r, s in zip(rows, signs):
            red, rs = self.reduce_row(r, s)
            if red:
                self._insert_reduced(red, rs)
            elif self.signed and rs:
                raise InconsistencyError("rows generate -I")
        self.rank = len(self.rows)
        return self

    def contains(self, p: PauliString | int) -> bool:
        row = p.row if isinstance(p, PauliString) else int(p)
        red, _ = self.reduce_row(row, 0)
        return red == 0

    def implied_sign(self, p: PauliString) -> int | None:
        """Sign the group assigns to ``p``; None if ``p`` is not a member."""
        red, s = self.reduce_row(p.row, 0)
        if red:
            return None
        # reduce_row builds g_1...g_m * p; membership means that product is +-I
        return -1 if s else 1

    def same_group(self, other: Tableau, *, check_signs: bool = True) -> bool:
        a, b = self.copy().reduce(), other.copy().reduce()
        if a.n != b.n or a.rows != b.rows:
            return False
        return not check_signs or a.signs == b.signs

    def subgroup_without_x(self, sites: Iterable[int]) -> Tableau:
        """Reduced generators of the elements acting as I or Z on every site listed.

        Those are exactly the group elements commuting with any diagonal
        single-qubit gate on those sites.
        """
        site_mask = sum(1 << j for j in set(sites))
        basis: list[tuple[int, int]] = []
        for r, s in zip(self.rows, self.signs):
            for br, bs in basis:
                if (r >> _masked_pivot(br, site_mask)) & 1:
                    r, s = self._combine(br, bs, r, s)
            if r:
                basis.append((r, s))
        # echelon form with the masked columns ordered first: a row free of
        # those columns has its pivot elsewhere, and such rows span the subgroup
        kept = [(r, s) for r, s in basis if not r & site_mask]
        sub = Tableau(self.n, [r for r, _ in kept], [s for _, s in kept], self.signed)
        return sub.reduce()

    # -- text format -------------------------------------------------------

    def to_text(self) -> str:
        return "".join(p.label + "\n" for p in self.paulis())

    @classmethod
    def from_text(cls, text: str, n: int | None = None) -> Tableau:
        paulis = [PauliString.from_label(line) for line in text.splitlines() if line.strip()]
        return cls.from_paulis(paulis, n=n)


def _pivot(row: int) -> int:
    return (row & -row).bit_length() - 1


def _masked_pivot(row: int, mask: int) -> int:
    return _pivot(row & mask) if row & mask else _pivot(row)


def gaussian_eliminate(t: Tableau) -> Tableau:
    """Reduced copy of ``t``: independent rows spanning the same space."""
    return t.copy().reduce()


def insert_and_reduce(t: Tableau, new_rows: Iterable[PauliString]) -> tuple[Tableau, int]:
    """Reduced copy of ``t`` with ``new_rows`` inserted, and the rank gain."""
    out = t.copy()
    if out.rank is None:
        out.reduce()
    before = out.rank
    for p in new_rows:
        out.add(p)
    return out, out.rank - before


def group_membership(t: Tableau, p: PauliString) -> bool:
    """True iff the (phaseless) string lies in the row space of reduced ``t``."""
    if p.n != t.n:
        raise ValidationError(f"width mismatch: {p.n} vs {t.n}")
    return t.contains(p)


def group_elements(t: Tableau) -> list[PauliString]:
    """All 2^k signed elements of the group generated by ``t``."""
    gens = t.paulis()
    elems = [PauliString.identity(t.n) if t.signed else PauliString((0,) * t.n)]
    for g in gens:
        elems = elems + [multiply(e, g) for e in elems]
    return elems
