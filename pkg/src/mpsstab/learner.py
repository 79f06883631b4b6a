"""Stabilizer-group learning by repeated sweeps over Clifford-modified states.

The first iteration sweeps the input state itself.  Every later iteration
scrambles a copy with a fresh shallow random Clifford circuit U, sweeps
U|psi>, maps the strings back with U^dag sigma U and keeps those that
stabilize the original state.  Sweeps only reach the most probable
branches, so rotating the state exposes generators a single sweep misses.
"""

from __future__ import annotations

import io
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .clifford import CliffordCircuit, conjugate_codes, random_clifford_circuit
from .errors import CapacityError, StaleRowError, ValidationError
from .mps import MpsState, apply_circuit, expectation_paulis, right_normalize
from .pauli import PauliString, Tableau, pack_code_array
from .sampler import SamplerConfig, sweep, verify_stabilizers

NORM_TOL = 1e-6


@dataclass
class LearnerConfig:
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    iterations: int = 5
    modifier_depth: int = 1
    patience: int = 5
    seed: int | None = None
    bond_cap: int = 4096
    sign_tol: float = 1e-6
    directions: tuple[str, ...] = ("forward", "backward")

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValidationError("iterations must be >= 1")
        if self.modifier_depth < 0:
            raise ValidationError("modifier_depth must be >= 0")
        if self.patience < 1:
            raise ValidationError("patience must be >= 1")
        if self.bond_cap < 1:
            raise ValidationError("bond_cap must be >= 1")
        if not self.directions or any(d not in ("forward", "backward") for d in self.directions):
            raise ValidationError("directions must be a non-empty subset of forward/backward")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    k: int
    candidates: int  # distinct strings accepted by the sweeps
    max_branches: int
    truncated: bool
    chi_max: int  # of the swept (possibly modified) state
    wall_time: float

    CSV_HEADER = "iteration,k,candidates,max_branches,truncated,chi_max,wall_time"

    def csv(self) -> str:
        return (f"{self.iteration},{self.k},{self.candidates},{self.max_branches},"
                f"{int(self.truncated)},{self.chi_max},{self.wall_time:.6f}")


@dataclass
class LearnResult:
    generators: Tableau
    history: list[IterationRecord] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.generators.n

    @property
    def k(self) -> int:
        return len(self.generators.rows)

    @property
    def nullity(self) -> int:
        return self.n - self.k

    def k_trace(self) -> list[int]:
        return [r.k for r in self.history]

    def report(self) -> str:
        """Text report: header lines, tableau text, then history as CSV."""
        out = io.StringIO()
        out.write(f"N={self.n}\nk={self.k}\nnullity={self.nullity}\n")
        out.write("generators:\n")
        out.write(self.generators.to_text())
        out.write("history:\n")
        out.write(IterationRecord.CSV_HEADER + "\n")
        for r in self.history:
            out.write(r.csv() + "\n")
        return out.getvalue()

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "nullity": self.nullity,
            "generators": [p.label for p in self.generators.paulis()],
            "history": [
                {
                    "iteration": r.iteration,
                    "k": r.k,
                    "candidates": r.candidates,
                    "max_branches": r.max_branches,
                    "truncated": r.truncated,
                    "chi_max": r.chi_max,
                    "wall_time": r.wall_time,
                }
                for r in self.history
            ],
        }


def modified_state(state: MpsState, circuit: CliffordCircuit, bond_cap: int | None = 4096) -> MpsState:
    """U|psi> as a right-normalized MPS; CapacityError above ``bond_cap``."""
    base = state if state.gauge == "right" else right_normalize(state)
    return apply_circuit(base, circuit, bond_cap=bond_cap)


def assign_signs(state: MpsState, t: Tableau, tol: float = 1e-6) -> Tableau:
    """Copy of ``t`` with every row signed by its expectation value.

    Raises:
        StaleRowError: a row has |<g>| < 1 - tol.
    """
    if not t.rows:
        return Tableau(t.n, signed=True).reduce()
    codes = np.array([p.codes for p in t.paulis()], dtype=np.int8)
    vals = expectation_paulis(state, codes)
    bad = np.flatnonzero(np.abs(vals) < 1 - tol)
    if bad.size:
        p = PauliString(tuple(codes[bad[0]]))
        raise StaleRowError(f"{p.label} has expectation {vals[bad[0]]:.3e}")
    signs = [0 if v > 0 else 1 for v in vals]
    # signed reduction rejects rows whose signs multiply to -I
    return Tableau(t.n, list(t.rows), signs, signed=True).reduce()


def _iteration_seed(seed: int | None, root: np.random.SeedSequence, iteration: int) -> np.random.SeedSequence:
    base = seed if seed is not None else root.entropy
    return np.random.SeedSequence([base, iteration])


def _insert_verified(state: MpsState, t: Tableau, codes: np.ndarray, tol: float) -> None:
    """Insert strings outside the current span that stabilize ``state``."""
    if codes.shape[0] == 0:
        return
    rows = pack_code_array(codes)
    fresh = [j for j, r in enumerate(rows) if t.reduce_row(r, 0)[0]]
    if not fresh:
        return
    signs = verify_stabilizers(state, codes[fresh], tol)
    for j, s in zip(fresh, signs):
        if s:
            t.add(rows[j], int(s))


def learn(state: MpsState, cfg: LearnerConfig | None = None,
          warm_start: Tableau | None = None) -> LearnResult:
    """Estimate the stabilizer group of ``state``.

    Args:
        state: Normalized MPS.
        cfg: Learner settings; defaults to :class:`LearnerConfig`.
        warm_start: Optional candidate generators. Each is checked on
            ``state`` and inserted with its measured sign before sweeping.

    Returns:
        Reduced signed generators and a per-iteration history.

    Raises:
        InconsistencyError: a verified string contradicts the group.
        CapacityError: a modified state exceeded ``cfg.bond_cap``; the
            result so far is attached as ``partial``.
    """
    cfg = cfg or LearnerConfig()
    if abs(state.norm() - 1.0) > NORM_TOL:
        raise ValidationError(f"state norm {state.norm():.6g} is not 1")
    base = state if state.gauge == "right" else right_normalize(state)
    n = base.n
    t = Tableau(n, signed=True).reduce()
    if warm_start is not None and warm_start.rows:
        if warm_start.n != n:
            raise ValidationError("warm start width does not match the state")
        codes = np.array([p.codes for p in warm_start.paulis()], dtype=np.int8)
        _insert_verified(base, t, codes, cfg.sign_tol)
    result = LearnResult(t)
    root = np.random.SeedSequence(cfg.seed)
    stale = 0
    for it in range(1, cfg.iterations + 1):
        if len(t.rows) == n:
            break
        start = time.perf_counter()
        before = len(t.rows)
        circuit = None
        work = base
        if it > 1:
            rng = np.random.default_rng(_iteration_seed(cfg.seed, root, it))
            circuit = random_clifford_circuit(n, cfg.modifier_depth, "generator_layers", rng)
            try:
                work = modified_state(base, circuit, cfg.bond_cap)
            except CapacityError as exc:
                raise CapacityError(str(exc), partial=result) from exc
        found, max_b, truncated = [], 0, False
        for d in cfg.directions:
            r = sweep(work, replace(cfg.sampler, direction=d))
            found.append(r.codes)
            max_b = max(max_b, r.max_branches)
            truncated |= r.truncated
        codes = np.unique(np.concatenate(found), axis=0)
        if circuit is not None and codes.shape[0]:
            codes, _ = conjugate_codes(codes, np.ones(codes.shape[0], dtype=np.int8), circuit, inverse=True)
        _insert_verified(base, t, codes, cfg.sign_tol)
        result.history.append(IterationRecord(
            it, len(t.rows), int(codes.shape[0]), max_b, truncated, work.max_bond,
            time.perf_counter() - start))
        stale = stale + 1 if len(t.rows) == before else 0
        if stale >= cfg.patience:
            break
    return result
