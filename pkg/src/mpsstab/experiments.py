"""Benchmark states and the three experiment drivers behind the CLI.

Seeds: every trajectory draws from ``SeedSequence([seed, *keys, traj])`` so
results depend only on the ExperimentSpec fields, never on worker count or run order.
Set ``MPSSTAB_WORKERS`` to run trajectories in a process pool.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .clifford import T, CliffordCircuit, conjugate_codes, random_clifford_circuit, staircase_layer
from .errors import CapacityError, InvariantViolationError, ValidationError
from .learner import LearnerConfig, LearnResult, learn
from .mps import MpsState, apply_circuit, apply_gates, from_product_state, zero_state
from .pauli import PauliString, Tableau
from .sampler import SamplerConfig

KINDS = ("fig2_success_prob", "fig3_k_vs_iter", "fig4_doped_dynamics", "learn_single")
FIG2_HEADER = "n,nt,iter,success_rate,stderr,trials"
FIG3_HEADER = "m,iter,mean_k,min_k,max_k,trials"
FIG4_HEADER = "traj,n,k,chi_max"
T_VECTOR = np.array([1.0, np.exp(1j * np.pi / 4)]) / math.sqrt(2.0)
WORKERS_ENV = "MPSSTAB_WORKERS"


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    n: tuple[int, ...] = (8,)
    nt: tuple[int, ...] = (0,)
    tau: int = 2
    m: tuple[int, ...] = (256,)
    iterations: int = 5
    depth: int = 1  # Clifford layers per modified state
    steps: int = 6  # fig4 dynamics steps
    trajectories: int = 100
    seed: int = 0
    bond_cap: int = 4096
    output: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValidationError(f"unknown experiment kind {self.kind!r}")
        if not self.n or min(self.n) < 1:
            raise ValidationError("n must be >= 1")
        if any(nt < 0 or nt > n for n in self.n for nt in self.nt):
            raise ValidationError("every nt must satisfy 0 <= nt <= n")
        if self.tau < 0 or self.tau > min(self.n):
            raise ValidationError("tau must satisfy 0 <= tau <= n")
        if not self.m or min(self.m) < 1:
            raise ValidationError("m must be >= 1")
        if self.trajectories < 1:
            raise ValidationError("trajectories must be >= 1")
        if self.iterations < 1 or self.depth < 0 or self.steps < 0:
            raise ValidationError("iterations >= 1, depth >= 0 and steps >= 0 are required")

    def learner_config(self, m: int, seed: int) -> LearnerConfig:
        # experiments fix the iteration count, so patience never cuts a run short
        return LearnerConfig(SamplerConfig(max_branches=m), iterations=self.iterations,
                             modifier_depth=self.depth, patience=self.iterations,
                             seed=seed, bond_cap=self.bond_cap)


@dataclass
class DopedState:
    state: MpsState
    circuit: CliffordCircuit
    reference: Tableau  # conjugated +Z generators of the Clifford part


def _rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *keys]))


def _child_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(1 << 62))


def prepare_doped_state(n: int, nt: int, seed: int | np.random.Generator | None = None,
                        bond_cap: int | None = None) -> DopedState:
    """|0>^(n-nt) |T>^nt scrambled by a depth-n random Clifford circuit."""
    if not 0 <= nt <= n:
        raise ValidationError("nt must satisfy 0 <= nt <= n")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    vectors = [np.array([1.0, 0.0])] * (n - nt) + [T_VECTOR] * nt
    circuit = random_clifford_circuit(n, n, "generator_layers", rng)
    state = apply_circuit(from_product_state(vectors), circuit, bond_cap=bond_cap)
    k = n - nt
    codes = np.zeros((k, n), dtype=np.int8)
    codes[np.arange(k), np.arange(k)] = 3
    codes, signs = conjugate_codes(codes, np.ones(k, dtype=np.int8), circuit)
    ref = Tableau.from_paulis([PauliString(tuple(c), int(s)) for c, s in zip(codes, signs)], n=n).reduce()
    return DopedState(state, circuit, ref)


def k_after_each_iteration(result: LearnResult, iterations: int) -> list[int]:
    """k after iterations 1..iterations; early stops repeat the final k."""
    trace = result.k_trace()
    last = trace[-1] if trace else result.k
    return [trace[i] if i < len(trace) else last for i in range(iterations)]


def _map(fn: Callable, items: Sequence) -> list:
    workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- fig2: success probability --------------------------------------------------------------


def _fig2_trajectory(args: tuple[ExperimentSpec, int, int, int]) -> list[int]:
    spec, n, nt, traj = args
    rng = _rng(spec.seed, n, nt, traj)
    doped = prepare_doped_state(n, nt, rng)
    res = learn(doped.state, spec.learner_config(spec.m[0], _child_seed(rng)))
    return k_after_each_iteration(res, spec.iterations)


def run_fig2(spec: ExperimentSpec) -> list[tuple]:
    """Rows (n, nt, iteration, success_rate, stderr, trials)."""
    rows = []
    for n in spec.n:
        for nt in spec.nt:
            ks = np.array(_map(_fig2_trajectory, [(spec, n, nt, j) for j in range(spec.trajectories)]))
            for it in range(spec.iterations):
                p = float(np.mean(ks[:, it] == n - nt))
                rows.append((n, nt, it + 1, p, math.sqrt(p * (1 - p) / len(ks)), len(ks)))
    return rows


# -- fig3: k versus iteration ------------------------------------------------------------------


def _fig3_trajectory(args: tuple[ExperimentSpec, int, int]) -> list[int]:
    spec, m, traj = args
    n, nt = spec.n[0], spec.nt[0]
    # the state depends on the trajectory only, so every M sees the same states
    rng = _rng(spec.seed, n, nt, traj)
    doped = prepare_doped_state(n, nt, rng)
    res = learn(doped.state, spec.learner_config(m, _child_seed(rng)))
    return k_after_each_iteration(res, spec.iterations)


def run_fig3(spec: ExperimentSpec) -> list[tuple]:
    """Rows (m, iteration, mean_k, min_k, max_k, trials)."""
    rows = []
    for m in spec.m:
        ks = np.array(_map(_fig3_trajectory, [(spec, m, j) for j in range(spec.trajectories)]))
        for it in range(spec.iterations):
            col = ks[:, it]
            rows.append((m, it + 1, float(col.mean()), int(col.min()), int(col.max()), len(col)))
    return rows


# -- fig4: doped dynamics -----------------------------------------------------------------------


@dataclass
class Fig4Step:
    n: int
    k: int
    chi_max: int
    state: MpsState
    generators: Tableau


@dataclass
class Fig4Trajectory:
    traj: int
    steps: list[Fig4Step] = field(default_factory=list)
    truncated: bool = False


def fig4_trajectory(spec: ExperimentSpec, traj: int) -> Fig4Trajectory:
    """One run of alternating Clifford and T layers with learning after each step."""
    n, tau = spec.n[0], spec.tau
    rng = _rng(spec.seed, n, tau, traj)
    state = zero_state(n)
    codes = np.zeros((n, n), dtype=np.int8)
    codes[np.arange(n), np.arange(n)] = 3
    gens = Tableau.from_paulis([PauliString(tuple(c), 1) for c in codes], n=n).reduce()
    out = Fig4Trajectory(traj, [Fig4Step(0, n, 1, state, gens)])
    for step in range(1, spec.steps + 1):
        layer = staircase_layer(n, rng)
        sites = sorted(int(q) for q in rng.choice(n, size=tau, replace=False))
        try:
            state = apply_gates(state, list(layer) + [(T, (q,)) for q in sites], bond_cap=spec.bond_cap)
            # surviving generators: conjugate through the layer, then drop X/Y on T sites
            prev = gens.paulis()
            warm = Tableau(n, signed=True).reduce()
            if prev:
                c, s = conjugate_codes(np.array([p.codes for p in prev], dtype=np.int8),
                                       np.array([p.sign for p in prev], dtype=np.int8), layer)
                moved = Tableau.from_paulis([PauliString(tuple(a), int(b)) for a, b in zip(c, s)], n=n)
                warm = moved.reduce().subgroup_without_x(sites)
            res = learn(state, spec.learner_config(spec.m[0], _child_seed(rng)), warm_start=warm)
        except CapacityError as exc:
            warnings.warn(f"trajectory {traj} stopped at step {step}: {exc}", stacklevel=2)
            out.truncated = True
            break
        gens = res.generators
        kmin = max(0, n - step * tau)
        if res.k < kmin:
            raise InvariantViolationError(f"trajectory {traj} step {step}: k={res.k} < {kmin}")
        out.steps.append(Fig4Step(step, res.k, state.max_bond, state, gens))
    return out


def _fig4_rows(args: tuple[ExperimentSpec, int]) -> tuple[list[tuple], bool]:
    spec, traj = args
    tr = fig4_trajectory(spec, traj)
    return [(traj, s.n, s.k, s.chi_max) for s in tr.steps], tr.truncated


def run_fig4(spec: ExperimentSpec) -> list[tuple]:
    """Rows (traj, n, k, chi_max); n = 0 is the initial product state."""
    rows = []
    for part, _ in _map(_fig4_rows, [(spec, j) for j in range(spec.trajectories)]):
        rows.extend(part)
    return rows


# -- CSV -------------------------------------------------------------------------------------


def _fmt(v: object) -> str:
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def to_csv(header: str, rows: Iterable[tuple]) -> str:
    lines = [header] + [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"
