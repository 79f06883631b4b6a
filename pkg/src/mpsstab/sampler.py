"""Pauli sampling from a right-normalized MPS.

Two samplers share one batched kernel.  ``perfect_samples`` draws strings
from Pi(sigma) = <sigma>^2 / 2^N site by site through the chain of
conditionals.  ``sweep`` instead keeps a beam of prefixes: at every site all
four continuations of every stored prefix are scored, prefixes whose
marginal falls below 1 / (2^i chi_i) are dropped (no stabilizer prefix can
fall below that bound), and the best ``max_branches`` survivors are kept.

For a prefix with environment L (chi x chi, unit Frobenius norm) and site
tensor A, the conditional probability of Pauli alpha is

    pi(alpha | prefix) = 1/2 || M_alpha ||_F^2,
    M_alpha = sum_{s', s} sigma^alpha_{s' s} A^{s'}^dag L A^s,

and the child environment is M_alpha / sqrt(2 pi(alpha | prefix)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .clifford import PAULI_MATRICES
from .errors import InvariantViolationError, NumericalConsistencyError, ValidationError
from .mps import MpsState, expectation_paulis, mirror, right_normalize
from .pauli import PauliString

# entries per chunk of stacked (chi x chi) matrices kept in memory at once
CHUNK_ELEMENTS = 1 << 22
NEG_CLAMP = 1e-10
SUM_TOL = 1e-6
LOG2 = math.log(2.0)


@dataclass
class SamplerConfig:
    max_branches: int = 1000
    direction: str = "forward"
    prune_slack: float = 1e-10
    accept_tol: float = 1e-8
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.max_branches < 1:
            raise ValidationError("max_branches must be >= 1")
        if self.direction not in ("forward", "backward"):
            raise ValidationError("direction must be 'forward' or 'backward'")
        for name in ("prune_slack", "accept_tol"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1e-4:
                raise ValidationError(f"{name} must lie in [0, 1e-4], got {v}")


@dataclass
class Branch:
    """A stored prefix with its marginal probability and environment."""

    prefix: tuple[int, ...]
    partial_prob: float
    environment: np.ndarray

    @classmethod
    def root(cls) -> Branch:
        return cls((), 1.0, np.ones((1, 1), dtype=complex))


@dataclass(frozen=True)
class Candidate:
    """Continuation of branch ``mu`` (with prefix ``prefix``) by Pauli ``alpha``."""

    alpha: int
    mu: int
    prob: float
    prefix: tuple[int, ...] = ()

    @property
    def child_prefix(self) -> tuple[int, ...]:
        return self.prefix + (self.alpha,)


@dataclass
class SweepResult:
    codes: np.ndarray  # (K, N) accepted strings, lexicographically sorted
    log_probs: np.ndarray  # (K,) log Pi of each string
    branch_counts: list[int] = field(default_factory=list)  # kept after each site
    truncated: bool = False  # whether the top-M cut ever discarded a survivor

    @property
    def max_branches(self) -> int:
        return max(self.branch_counts, default=0)

    def paulis(self) -> list[PauliString]:
        return [PauliString(tuple(c)) for c in self.codes]


# -- kernel --------------------------------------------------------------------------


def _site_products(envs: np.ndarray, a: np.ndarray) -> np.ndarray:
    """C[k, s' s] = A^{s'}^dag L_k A^s flattened to shape (K, 4, chr * chr)."""
    ad = a.conj().transpose(1, 2, 0)  # (s', chr, chl)
    b = envs[:, None] @ a.transpose(1, 0, 2)[None]  # (K, s, chl, chr)
    c = ad[None, :, None] @ b[:, None]  # (K, s', s, chr, chr)
    return c.reshape(envs.shape[0], 4, -1)


_PAULI_FLAT = PAULI_MATRICES.reshape(4, 4)


def _pauli_matrices_from(c: np.ndarray, alphas: np.ndarray | None = None) -> np.ndarray:
    """M_alpha (flattened) from site products; all four alphas or one per row."""
    if alphas is None:
        return _PAULI_FLAT @ c  # (K, 4, chr * chr)
    return (_PAULI_FLAT[alphas][:, None, :] @ c)[:, 0]


def _chunks(k: int, chi: int) -> list[slice]:
    step = max(1, CHUNK_ELEMENTS // max(1, 4 * chi * chi))
    return [slice(s, min(k, s + step)) for s in range(0, k, step)]


def _check_probs(probs: np.ndarray) -> np.ndarray:
    if probs.size and probs.min() < -NEG_CLAMP:
        raise NumericalConsistencyError(f"negative conditional probability {probs.min():.3e}")
    dev = np.abs(probs.sum(axis=1) - 1.0)
    if dev.size and dev.max() > SUM_TOL:
        raise NumericalConsistencyError(f"conditional probabilities sum off by {dev.max():.3e}")
    return np.clip(probs, 0.0, None)


def conditional_probs_batch(envs: np.ndarray, a: np.ndarray) -> np.ndarray:
    """pi(alpha | mu) for all branches: (K, chl, chl) environments -> (K, 4)."""
    k = envs.shape[0]
    out = np.empty((k, 4))
    for sl in _chunks(k, a.shape[2]):
        m = _pauli_matrices_from(_site_products(envs[sl], a))
        out[sl] = 0.5 * np.sum(m.real**2 + m.imag**2, axis=2)
    return _check_probs(out)


def child_environments(envs: np.ndarray, a: np.ndarray, parents: np.ndarray,
                       alphas: np.ndarray, cond: np.ndarray) -> np.ndarray:
    """Normalized environments of the selected (parent, alpha) children."""
    if np.any(cond <= 0):
        raise ValidationError("cannot extend a branch by a zero-probability Pauli")
    chi = a.shape[2]
    out = np.empty((parents.size, chi, chi), dtype=complex)
    for sl in _chunks(parents.size, chi):
        c = _site_products(envs[parents[sl]], a)
        m = _pauli_matrices_from(c, alphas[sl])
        out[sl] = (m / np.sqrt(2.0 * cond[sl])[:, None]).reshape(-1, chi, chi)
    return out


def conditional_probs(branch: Branch, site_tensor: np.ndarray) -> np.ndarray:
    """The four conditionals pi(alpha | branch.prefix) at the next site."""
    env = np.asarray(branch.environment, dtype=complex)
    if env.shape[0] != site_tensor.shape[0]:
        raise ValidationError("environment does not match the site tensor's left bond")
    return conditional_probs_batch(env[None], site_tensor)[0]


def update_environment(branch: Branch, alpha: int, site_tensor: np.ndarray,
                       cond: float | None = None) -> Branch:
    """Extend ``branch`` by ``alpha``; the new environment has unit norm."""
    if cond is None:
        cond = float(conditional_probs(branch, site_tensor)[alpha])
    if cond <= 0:
        raise ValidationError("cannot extend a branch by a zero-probability Pauli")
    env = child_environments(branch.environment[None], site_tensor, np.array([0]),
                             np.array([alpha]), np.array([cond]))[0]
    return Branch(branch.prefix + (alpha,), branch.partial_prob * cond, env)


# -- pruning rules ---------------------------------------------------------------------


def _bound_mask(log_probs: np.ndarray, i: int, chi: int, slack: float) -> np.ndarray:
    # 2^i chi pi >= 1 - slack, in log form
    return log_probs + i * LOG2 + math.log(chi) >= math.log1p(-slack)


def prune_by_bound(candidates: Sequence[Candidate], i: int, chi_i: int,
                   slack: float = 1e-10) -> list[Candidate]:
    """Keep candidates with 2^i chi_i prob >= 1 - slack."""
    with np.errstate(divide="ignore"):
        logs = np.log(np.array([c.prob for c in candidates], dtype=float))
    keep = _bound_mask(logs, i, chi_i, slack)
    out = [c for c, k in zip(candidates, keep) if k]
    if not out:
        raise InvariantViolationError(f"every branch failed the bound at site {i}")
    return out


def _top_order(log_probs: np.ndarray, prefixes: np.ndarray) -> np.ndarray:
    """Indices by descending probability, ties by lexicographic prefix."""
    keys = [prefixes[:, j] for j in range(prefixes.shape[1] - 1, -1, -1)]
    return np.lexsort(keys + [-log_probs])


def select_top_M(candidates: Sequence[Candidate], M: int) -> list[Candidate]:  # noqa: N802
    """The ``M`` most probable candidates, ties to the smallest (prefix, alpha)."""
    if len(candidates) <= M:
        return list(candidates)
    probs = np.array([c.prob for c in candidates], dtype=float)
    prefixes = np.array([c.child_prefix for c in candidates], dtype=np.int64)
    if prefixes.ndim == 1:
        prefixes = prefixes[:, None]
    order = _top_order(probs, prefixes)[:M]
    return [candidates[k] for k in order]


# -- stabilizer sweep ---------------------------------------------------------------------


def oriented(state: MpsState, direction: str) -> MpsState:
    """Right-normalized state to sweep; ``backward`` mirrors the site order."""
    if direction == "backward":
        state = mirror(state)
    return state if state.gauge == "right" else right_normalize(state)


def sweep(state: MpsState, cfg: SamplerConfig) -> SweepResult:
    """Beam sweep over sites; returns every accepted string.

    Strings are reported in the original site order for both directions.
    Once the top-M cut has dropped branches, every kept branch may later
    fail the bound; the sweep then returns no strings.

    Raises:
        InvariantViolationError: all branches failed the bound although
            no branch had been cut, which only numerical breakdown can cause.
    """
    work = oriented(state, cfg.direction)
    n = work.n
    envs = np.ones((1, 1, 1), dtype=complex)
    logp = np.zeros(1)
    prefixes = np.zeros((1, 0), dtype=np.int8)
    counts: list[int] = []
    truncated = False
    for i, a in enumerate(work.tensors, start=1):
        cond = conditional_probs_batch(envs, a)
        with np.errstate(divide="ignore"):
            cand = logp[:, None] + np.log(cond)
        chi = a.shape[2]
        mu, alpha = np.nonzero(_bound_mask(cand, i, chi, cfg.prune_slack))
        if mu.size == 0:
            if not truncated:
                # the identity prefix always passes unless a top-M cut removed it
                raise InvariantViolationError(f"every branch failed the bound at site {i}")
            counts.append(0)
            return SweepResult(np.zeros((0, n), dtype=np.int8), np.zeros(0), counts, True)
        cand_logp = cand[mu, alpha]
        child = np.concatenate([prefixes[mu], alpha[:, None].astype(np.int8)], axis=1)
        if mu.size > cfg.max_branches:
            truncated = True
            keep = _top_order(cand_logp, child)[: cfg.max_branches]
            mu, alpha, cand_logp, child = mu[keep], alpha[keep], cand_logp[keep], child[keep]
        envs = child_environments(envs, a, mu, alpha, cond[mu, alpha])
        logp, prefixes = cand_logp, child
        counts.append(int(mu.size))
    accepted = logp + n * LOG2 >= math.log1p(-cfg.accept_tol)
    codes, logp = prefixes[accepted], logp[accepted]
    if cfg.direction == "backward":
        codes = codes[:, ::-1]
    order = np.lexsort([codes[:, j] for j in range(n - 1, -1, -1)])
    return SweepResult(np.ascontiguousarray(codes[order]), logp[order], counts, truncated)


def stabilizer_sweep(state: MpsState, cfg: SamplerConfig) -> list[PauliString]:
    return sweep(state, cfg).paulis()


# -- perfect sampling ------------------------------------------------------------------------


def perfect_samples(state: MpsState, count: int,
                    seed: int | np.random.Generator | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``count`` i.i.d. strings from Pi and their exact probabilities."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    work = oriented(state, "forward")
    codes = np.zeros((count, work.n), dtype=np.int8)
    probs = np.ones(count)
    # chunk over samples; each chunk walks all sites
    step = max(1, CHUNK_ELEMENTS // max(1, 4 * work.max_bond**2))
    for start in range(0, count, step):
        sl = slice(start, min(count, start + step))
        k = sl.stop - sl.start
        envs = np.ones((k, 1, 1), dtype=complex)
        idx = np.arange(k)
        for j, a in enumerate(work.tensors):
            cond = conditional_probs_batch(envs, a)
            cum = np.cumsum(cond, axis=1)
            u = rng.random(k) * cum[:, -1]
            alpha = np.minimum((u[:, None] >= cum).sum(axis=1), 3)
            # guard against landing on a zero-probability entry through rounding
            while np.any(cond[idx, alpha] <= 0):
                bad = cond[idx, alpha] <= 0
                alpha[bad] = np.argmax(cond[bad], axis=1)
            pa = cond[idx, alpha]
            envs = child_environments(envs, a, idx, alpha, pa)
            codes[sl, j] = alpha
            probs[sl] *= pa
    return codes, probs


def perfect_sample(state: MpsState, seed: int | np.random.Generator | None = None) -> tuple[PauliString, float]:
    codes, probs = perfect_samples(state, 1, seed)
    return PauliString(tuple(codes[0])), float(probs[0])


# -- verification and analysis ------------------------------------------------------------------


def verify_stabilizers(state: MpsState, codes: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Sign (+1/-1) of each accepted string, 0 where |<sigma>| < 1 - tol."""
    codes = np.asarray(codes)
    if codes.shape[0] == 0:
        return np.zeros(0, dtype=np.int8)
    vals = expectation_paulis(state, codes)
    signs = np.where(vals > 0, 1, -1).astype(np.int8)
    signs[np.abs(vals) < 1 - tol] = 0
    return signs


def verify_stabilizer(state: MpsState, p: PauliString, tol: float = 1e-6) -> PauliString | None:
    """Signed copy of ``p`` if it stabilizes ``state``, else None."""
    s = int(verify_stabilizers(state, np.asarray([p.codes]), tol)[0])
    return p.with_sign(s) if s else None


def right_environments(state: MpsState, p: PauliString) -> list[np.ndarray]:
    """Normalized right environments R_i (chi_i x chi_i), i = 0..N.

    R_N = (1) and R_{k-1} = 2^{-1/2} sum_{s's} conj(sigma)_{s's} A^{s'} R_k A^{s dag}.
    """
    if state.gauge != "right":
        raise ValidationError("right_environments needs a right-normalized state")
    if p.n != state.n:
        raise ValidationError("Pauli length does not match the state")
    envs = [np.ones((1, 1), dtype=complex)]
    r = envs[0]
    for a, c in zip(reversed(state.tensors), reversed(p.codes)):
        sig = PAULI_MATRICES[c].conj()
        ar = [a[:, p] @ r for p in range(2)]
        r = sum(sig[p, q] * ar[p] @ a[:, q].conj().T
                for p in range(2) for q in range(2) if sig[p, q]) / math.sqrt(2.0)
        envs.append(r)
    return envs[::-1]
