"""Acceptance criteria 1-9; each test prints one PASS/FAIL line.

The lines are also collected into the pytest terminal summary.
"""

import os
import subprocess
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from mpsstab import experiments as ex
from mpsstab.clifford import T, random_clifford_circuit
from mpsstab.learner import LearnerConfig, learn
from mpsstab.mps import apply_gates, random_mps, zero_state
from mpsstab.oracle import (
    codes_to_index,
    exact_pauli_distribution,
    exact_stabilizer_group,
    exact_stabilizer_rank,
    prefix_marginals,
    stabilizer_strings,
)
from mpsstab.pauli import PauliString, group_elements
from mpsstab.sampler import SamplerConfig, perfect_samples, right_environments, stabilizer_sweep

from .conftest import ACCEPTANCE_LINES


@contextmanager
def criterion(number, title):
    info = {"detail": ""}
    start = time.perf_counter()
    try:
        yield info
    except BaseException as exc:
        line = f"criterion {number} FAIL: {title}: {info['detail'] or type(exc).__name__}"
        raise
    else:
        line = f"criterion {number} PASS: {title}: {info['detail']}"
    finally:
        line += f" ({time.perf_counter() - start:.1f}s)"
        ACCEPTANCE_LINES.append(line)
        print(line)


def test_criterion_1_oracle_group_equivalence():
    with criterion(1, "learned signed group equals oracle group") as info:
        combos = [(n, nt) for n in (4, 6, 8) for nt in (0, n // 4, n // 2)]
        start = time.perf_counter()
        matches = 0
        for j in range(50):
            n, nt = combos[j % len(combos)]
            d = ex.prepare_doped_state(n, nt, j)
            cfg = LearnerConfig(SamplerConfig(max_branches=4**n // 4), iterations=5,
                                modifier_depth=1, seed=j)
            got = learn(d.state, cfg).generators
            matches += got.same_group(exact_stabilizer_group(d.state), check_signs=True)
        elapsed = time.perf_counter() - start
        info["detail"] = f"{matches}/50 exact matches, {elapsed:.0f}s of 300s"
        assert matches == 50
        assert elapsed <= 300


def test_criterion_2_success_rate():
    with criterion(2, "N=10, N_T=5, M=256 success by iteration 5") as info:
        spec = ex.ExperimentSpec("fig2_success_prob", n=(10,), nt=(5,), m=(256,), iterations=5,
                                 depth=1, trajectories=100, seed=0)
        start = time.perf_counter()
        rows = ex.run_fig2(spec)
        elapsed = time.perf_counter() - start
        rate = rows[-1][3]
        info["detail"] = f"success {rate:.2f} over {rows[-1][5]} trajectories, {elapsed:.0f}s of 600s"
        assert rows[-1][2] == 5
        assert rate >= 0.99
        assert elapsed <= 600


def _prefix_bound_violations(state):
    dist = exact_pauli_distribution(state)
    n = state.n
    chis = state.bond_profile
    strings = stabilizer_strings(state)
    assert len(strings) == 2 ** exact_stabilizer_rank(state)
    marg = [prefix_marginals(dist, i) for i in range(n + 1)]
    bad = 0
    for p in strings:
        for i in range(1, n + 1):
            pi = marg[i][codes_to_index(p.codes[:i])]
            bad += 2**i * chis[i] * pi < 1 - 1e-10
    return bad, len(strings)


def test_criterion_3_prefix_bound():
    with criterion(3, "every stabilizer prefix satisfies 2^i chi_i pi >= 1 - 1e-10") as info:
        rng = np.random.default_rng(3)
        violations = checked = 0
        for j in range(40):
            n = int(rng.integers(2, 9))
            nt = 0 if j < 20 else int(rng.integers(1, n + 1))
            bad, count = _prefix_bound_violations(ex.prepare_doped_state(n, nt, rng).state)
            violations += bad
            checked += count
        info["detail"] = f"{violations} violations over {checked} strings"
        assert violations == 0


def test_criterion_4_environment_norm_bound():
    with criterion(4, "right environment norm bound") as info:
        rng = np.random.default_rng(4)
        violations = sites = 0
        for j in range(100):
            n = int(rng.integers(1, 11))
            if j % 2:
                # stabilizer strings of doped states sit right at the edge of the bound
                d = ex.prepare_doped_state(n, int(rng.integers(0, n + 1)), rng)
                state = d.state
                elems = group_elements(d.reference)
                p = elems[int(rng.integers(len(elems)))].unsigned()
            else:
                state = random_mps(n, int(rng.integers(1, 33)), rng)
                p = PauliString(tuple(int(c) for c in rng.integers(4, size=n)))
            assert state.max_bond <= 32
            chis = state.bond_profile
            for i, r in enumerate(right_environments(state, p)):
                sites += 1
                violations += np.sum(np.abs(r) ** 2) > chis[i] / 2 ** (n - i) + 1e-10
        info["detail"] = f"{violations} violations over {sites} sites"
        assert violations == 0


def test_criterion_5_t_count_rank_bound():
    with criterion(5, "oracle rank >= N - t for t-doped circuits") as info:
        rng = np.random.default_rng(5)
        violations = 0
        for j in range(50):
            t = 1 + j % 6
            n = int(rng.integers(2, 9))
            gates = []
            for _ in range(t):
                gates += list(random_clifford_circuit(n, 2, "generator_layers", rng))
                gates.append((T, (int(rng.integers(n)),)))
            gates += list(random_clifford_circuit(n, 2, "generator_layers", rng))
            k = exact_stabilizer_rank(apply_gates(zero_state(n), gates))
            violations += k < n - t
        info["detail"] = f"{violations} violations over 50 circuits"
        assert violations == 0


def test_criterion_6_perfect_sampler():
    with criterion(6, "perfect sampler fidelity") as info:
        s = random_mps(4, 4, 6)
        dist = exact_pauli_distribution(s)
        draws = 100_000
        codes, _ = perfect_samples(s, draws, seed=6)
        counts = np.bincount([codes_to_index(c) for c in codes], minlength=4**4)
        assert counts[dist < 1e-14].sum() == 0
        expected = dist * draws
        small = expected < 5
        obs = np.append(counts[~small], counts[small].sum())
        exp = np.append(expected[~small], expected[small].sum())
        if exp[-1] == 0:
            obs, exp = obs[:-1], exp[:-1]
        pvalue = stats.chisquare(obs, exp).pvalue

        d = ex.prepare_doped_state(6, 2, 6)
        group = exact_stabilizer_group(d.state)
        trials = 20_000
        sample_codes, _ = perfect_samples(d.state, trials, seed=7)
        hits = sum(group.contains(PauliString(tuple(c))) for c in sample_codes)
        rate = hits / trials
        target = 2.0 ** (group.rank - 6)
        se = np.sqrt(target * (1 - target) / trials)
        info["detail"] = (f"chi2 p={pvalue:.3f} (>0.01); G_S hit rate {rate:.4f} vs {target:.4f} "
                          f"(|dev| {abs(rate - target) / se:.2f} SE)")
        assert pvalue > 0.01
        assert group.rank == 4
        assert abs(rate - target) <= 3 * se


def test_criterion_7_doped_dynamics_bound():
    with criterion(7, "k(n) >= N - n tau and oracle agreement at N=10") as info:
        start = time.perf_counter()
        spec = ex.ExperimentSpec("fig4_doped_dynamics", n=(12,), tau=2, steps=8, trajectories=20, seed=0)
        rows = ex.run_fig4(spec)
        bad = sum(k < max(0, 12 - n * 2) for _, n, k, _ in rows)
        small = ex.ExperimentSpec("fig4_doped_dynamics", n=(10,), tau=2, steps=8, trajectories=20, seed=1)
        mismatches = points = 0
        for j in range(small.trajectories):
            for step in ex.fig4_trajectory(small, j).steps:
                points += 1
                mismatches += step.k != exact_stabilizer_rank(step.state)
        elapsed = time.perf_counter() - start
        info["detail"] = (f"N=12: {len(rows)} rows, {bad} bound violations; N=10: "
                          f"{mismatches}/{points} oracle mismatches; {elapsed:.0f}s of 900s")
        assert len(rows) == 20 * 9
        assert bad == 0 and mismatches == 0
        assert elapsed <= 900


def test_criterion_8_sweep_scaling():
    with criterion(8, "sweep time exponent in chi") as info:
        chis = [32, 64, 128]
        times = []
        cfg = SamplerConfig(max_branches=64)
        for chi in chis:
            s = random_mps(32, chi, chi)
            stabilizer_sweep(s, cfg)
            runs = []
            for _ in range(3):
                t0 = time.perf_counter()
                stabilizer_sweep(s, cfg)
                runs.append(time.perf_counter() - t0)
            times.append(min(runs))
        p = float(np.polyfit(np.log(chis), np.log(times), 1)[0])
        info["detail"] = f"p={p:.2f} (<=3.5), times " + ", ".join(f"{t:.3f}s" for t in times)
        assert p <= 3.5


CLI_RUNS = [
    ["fig2", "--n", "6", "--nt", "0,2,3", "--m", "16", "--traj", "6", "--iterations", "3", "--seed", "9"],
    ["fig3", "--n", "8", "--nt", "4", "--m", "2,8", "--traj", "4", "--iterations", "4", "--seed", "9"],
    ["fig4", "--n", "8", "--tau", "2", "--steps", "4", "--traj", "4", "--seed", "9"],
]


def _cli(args, out, workers):
    env = dict(os.environ, MPSSTAB_WORKERS=str(workers))
    subprocess.run([sys.executable, "-m", "mpsstab", *args, "--out", str(out)], check=True, env=env)
    return Path(out).read_bytes()


def test_criterion_9_cli_determinism(tmp_path):
    with criterion(9, "CLI reruns give byte-identical CSV") as info:
        identical = 0
        for j, args in enumerate(CLI_RUNS):
            first = _cli(args, tmp_path / f"a{j}.csv", 1)
            second = _cli(args, tmp_path / f"b{j}.csv", 1)
            pooled = _cli(args, tmp_path / f"c{j}.csv", 2)
            identical += first == second == pooled and len(first.splitlines()) > 1
        info["detail"] = f"{identical}/{len(CLI_RUNS)} experiments identical across reruns and worker counts"
        assert identical == len(CLI_RUNS)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
