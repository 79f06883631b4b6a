import csv
import io

import numpy as np
import pytest

from mpsstab import experiments as ex
from mpsstab.errors import ValidationError
from mpsstab.learner import learn
from mpsstab.oracle import exact_stabilizer_group, exact_stabilizer_rank
from mpsstab.sampler import verify_stabilizer


def parse(text, header):
    rows = list(csv.DictReader(io.StringIO(text)))
    assert text.splitlines()[0] == header
    return rows


def test_spec_validation():
    with pytest.raises(ValidationError):
        ex.ExperimentSpec("fig9")
    with pytest.raises(ValidationError):
        ex.ExperimentSpec("fig2_success_prob", n=(4,), nt=(5,))
    with pytest.raises(ValidationError):
        ex.ExperimentSpec("fig4_doped_dynamics", n=(4,), tau=5)
    with pytest.raises(ValidationError):
        ex.ExperimentSpec("fig2_success_prob", trajectories=0)


def test_prepare_doped_state_reference():
    d = ex.prepare_doped_state(6, 2, 5)
    assert d.reference.rank == 4
    for g in d.reference.paulis():
        assert verify_stabilizer(d.state, g.unsigned()).sign == g.sign
    assert exact_stabilizer_group(d.state).same_group(d.reference)
    assert exact_stabilizer_rank(ex.prepare_doped_state(5, 0, 1).state) == 5


def test_prepare_is_seeded():
    a, b = ex.prepare_doped_state(6, 3, 8), ex.prepare_doped_state(6, 3, 8)
    assert a.reference.rows == b.reference.rows
    assert all(np.array_equal(x, y) for x, y in zip(a.state.tensors, b.state.tensors))


def test_fully_doped_learner_bounded_by_oracle():
    for seed in range(3):
        d = ex.prepare_doped_state(6, 6, seed)
        spec = ex.ExperimentSpec("learn_single", n=(6,), nt=(6,), m=(64,))
        assert learn(d.state, spec.learner_config(64, seed)).k <= exact_stabilizer_rank(d.state)


def test_fig2_stabilizer_states_always_succeed():
    spec = ex.ExperimentSpec("fig2_success_prob", n=(4, 6), nt=(0,), m=(64,), iterations=2, trajectories=5)
    rows = parse(ex.to_csv(ex.FIG2_HEADER, ex.run_fig2(spec)), ex.FIG2_HEADER)
    assert len(rows) == 4
    assert all(float(r["success_rate"]) == 1.0 and float(r["stderr"]) == 0.0 for r in rows)
    assert [int(r["iter"]) for r in rows] == [1, 2, 1, 2]


def test_fig2_rates_are_monotone():
    spec = ex.ExperimentSpec("fig2_success_prob", n=(8,), nt=(4,), m=(4,), iterations=4, trajectories=6, seed=3)
    rates = [r[3] for r in ex.run_fig2(spec)]
    assert rates == sorted(rates)
    for r in ex.run_fig2(spec):
        p = r[3]
        assert r[4] == pytest.approx(np.sqrt(p * (1 - p) / 6))


def test_fig3_rows_and_monotonicity():
    spec = ex.ExperimentSpec("fig3_k_vs_iter", n=(8,), nt=(4,), m=(2, 256), iterations=3, trajectories=4, seed=1)
    rows = parse(ex.to_csv(ex.FIG3_HEADER, ex.run_fig3(spec)), ex.FIG3_HEADER)
    assert len(rows) == 6
    for m in ("2", "256"):
        means = [float(r["mean_k"]) for r in rows if r["m"] == m]
        assert means == sorted(means)
        for r in rows:
            assert int(r["min_k"]) <= float(r["mean_k"]) <= int(r["max_k"]) <= 4
    # an untruncated sweep reaches the full group at once
    assert [float(r["mean_k"]) for r in rows if r["m"] == "256"][0] == 4.0


def test_fig3_trajectories_are_monotone():
    spec = ex.ExperimentSpec("fig3_k_vs_iter", n=(10,), nt=(5,), m=(2,), iterations=5, trajectories=3, seed=4)
    for j in range(3):
        ks = ex._fig3_trajectory((spec, 2, j))
        assert ks == sorted(ks)


def test_fig4_matches_frozen_oracle_ranks():
    # ranks computed once with the brute-force oracle for these seeds
    frozen = {
        0: [10, 8, 6, 4, 2, 0, 0],
        1: [10, 8, 7, 5, 3, 1, 0],
        2: [10, 10, 8, 6, 4, 2, 1],
    }
    spec = ex.ExperimentSpec("fig4_doped_dynamics", n=(10,), tau=2, steps=6, trajectories=3, seed=7)
    for j, ks in frozen.items():
        tr = ex.fig4_trajectory(spec, j)
        assert [s.k for s in tr.steps] == ks
        assert [exact_stabilizer_rank(s.state) for s in tr.steps] == ks


def test_fig4_rows_respect_bound():
    spec = ex.ExperimentSpec("fig4_doped_dynamics", n=(8,), tau=3, steps=4, trajectories=3, seed=2)
    rows = parse(ex.to_csv(ex.FIG4_HEADER, ex.run_fig4(spec)), ex.FIG4_HEADER)
    assert len(rows) == 3 * 5
    for r in rows:
        assert int(r["k"]) >= max(0, 8 - int(r["n"]) * 3)
    assert all(int(r["k"]) == 8 for r in rows if r["n"] == "0")


def test_fig4_bond_cap_truncates_with_warning():
    spec = ex.ExperimentSpec("fig4_doped_dynamics", n=(8,), tau=1, steps=5, trajectories=1, seed=0, bond_cap=2)
    with pytest.warns(UserWarning):
        tr = ex.fig4_trajectory(spec, 0)
    assert tr.truncated and len(tr.steps) < 6


def test_worker_pool_gives_same_rows(monkeypatch):
    spec = ex.ExperimentSpec("fig4_doped_dynamics", n=(6,), tau=1, steps=3, trajectories=3, seed=5)
    serial = ex.run_fig4(spec)
    monkeypatch.setenv(ex.WORKERS_ENV, "2")
    assert ex.run_fig4(spec) == serial


def test_csv_formatting():
    assert ex.to_csv("a,b", [(1, 0.5)]) == "a,b\n1,0.500000\n"
