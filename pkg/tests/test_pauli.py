import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mpsstab.errors import InconsistencyError, ValidationError
from mpsstab.pauli import (
    PauliString,
    Tableau,
    commutes,
    decode,
    encode,
    gaussian_eliminate,
    group_elements,
    group_membership,
    insert_and_reduce,
    multiply,
    pack_code_array,
    product_phase,
    symplectic_product,
    unpack_row,
    unpack_row_array,
)

from .helpers import pauli_matrix

codes_st = st.integers(1, 5).flatmap(lambda n: st.lists(st.integers(0, 3), min_size=n, max_size=n))


def pair_st():
    return st.integers(1, 5).flatmap(
        lambda n: st.tuples(
            st.lists(st.integers(0, 3), min_size=n, max_size=n),
            st.lists(st.integers(0, 3), min_size=n, max_size=n),
        )
    )


def test_label_round_trip():
    p = PauliString.from_label("-XYZI")
    assert p.codes == (1, 2, 3, 0) and p.sign == -1
    assert p.label == "-XYZI"
    assert PauliString.from_label("ZZ").sign is None
    assert PauliString.from_label("−Z").sign == -1
    with pytest.raises(ValidationError):
        PauliString.from_label("XQ")
    with pytest.raises(ValidationError):
        PauliString((4,))


def test_encoding_layout():
    # I, X, Y, Z -> (0,0), (1,0), (1,1), (0,1)
    assert encode(PauliString((0, 1, 2, 3))).tolist() == [0, 1, 1, 0, 0, 0, 1, 1]
    assert decode([0, 1, 1, 0, 0, 0, 1, 1]).codes == (0, 1, 2, 3)


@given(codes_st)
def test_pack_round_trip(codes):
    p = PauliString(tuple(codes))
    assert unpack_row(p.row, p.n) == p.codes
    assert pack_code_array(np.array([codes])) == [p.row]
    assert tuple(unpack_row_array([p.row], p.n)[0]) == p.codes
    assert decode(encode(p)).codes == p.codes


@given(pair_st())
def test_symplectic_product_matches_matrices(pair):
    a, b = (PauliString(tuple(c)) for c in pair)
    ma, mb = pauli_matrix(a), pauli_matrix(b)
    anticommute = not np.allclose(ma @ mb, mb @ ma)
    assert symplectic_product(a.row, b.row, a.n) == int(anticommute)
    assert symplectic_product(encode(a), encode(b)) == int(anticommute)
    assert commutes(a, b) == (not anticommute)


@given(pair_st())
def test_product_phase_matches_matrices(pair):
    a, b = (PauliString(tuple(c)) for c in pair)
    e = product_phase(a.row, b.row, a.n)
    c = PauliString(unpack_row(a.row ^ b.row, a.n))
    assert np.allclose(pauli_matrix(a) @ pauli_matrix(b), (1j**e) * pauli_matrix(c))


@given(pair_st(), st.sampled_from([1, -1]), st.sampled_from([1, -1]))
def test_multiply_signed(pair, sa, sb):
    a, b = PauliString(tuple(pair[0]), sa), PauliString(tuple(pair[1]), sb)
    if not commutes(a, b):
        with pytest.raises(ValidationError):
            multiply(a, b)
        return
    assert np.allclose(pauli_matrix(a) @ pauli_matrix(b), pauli_matrix(multiply(a, b)))


def test_tableau_basic_rref():
    t = Tableau.from_paulis([PauliString.from_label(s) for s in ("+ZZI", "+IZZ", "+ZIZ")]).reduce()
    assert t.rank == 2
    m = t.matrix()
    pivots = t.pivots()
    assert pivots == sorted(pivots)
    # reduced: each pivot column has a single 1
    for r, p in enumerate(pivots):
        assert m[:, p].sum() == 1 and m[r, p] == 1


def test_add_reports_growth_and_conflicts():
    t = Tableau(3).reduce()
    assert t.add(PauliString.from_label("+ZII"))
    assert t.add(PauliString.from_label("+IZI"))
    assert not t.add(PauliString.from_label("+ZZI"))
    with pytest.raises(InconsistencyError):
        t.add(PauliString.from_label("-ZZI"))
    with pytest.raises(InconsistencyError):
        t.add(PauliString.from_label("+XII"))
    assert t.rank == 2


def test_reduce_rejects_minus_identity():
    t = Tableau.from_paulis([PauliString.from_label("+ZZ"), PauliString.from_label("-ZZ")])
    with pytest.raises(InconsistencyError):
        t.reduce()
    u = Tableau.from_paulis([PauliString.from_label("ZZ"), PauliString.from_label("ZZ")])
    assert not u.signed and u.reduce().rank == 1


def test_implied_sign_and_membership():
    t = Tableau.from_paulis([PauliString.from_label(s) for s in ("+XX", "-ZZ")]).reduce()
    assert t.implied_sign(PauliString.from_label("YY")) == 1  # XX * ZZ = -YY, times -1
    assert t.implied_sign(PauliString.from_label("ZZ")) == -1
    assert t.implied_sign(PauliString.from_label("XI")) is None
    assert group_membership(t, PauliString.from_label("YY"))
    assert not group_membership(t, PauliString.from_label("ZI"))


def test_text_round_trip():
    t = Tableau.from_paulis([PauliString.from_label(s) for s in ("+XZI", "-IZZ")]).reduce()
    text = t.to_text()
    assert text.splitlines() == [p.label for p in t.paulis()]
    assert Tableau.from_text(text).same_group(t)


def _random_group(rng, n, k):
    """Random signed abelian group of rank k that excludes -I."""
    t = Tableau(n).reduce()
    while t.rank < k:
        p = PauliString(tuple(int(c) for c in rng.integers(4, size=n)), int(rng.choice([1, -1])))
        if p.row == 0:
            continue
        if all(symplectic_product(p.row, r, n) == 0 for r in t.rows):
            sign = t.implied_sign(p)
            t.add(p if sign is None else p.with_sign(sign))
    return t


@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.data())
def test_group_closure_and_signs(seed, n, data):
    rng = np.random.default_rng(seed)
    k = data.draw(st.integers(0, n))
    t = _random_group(rng, n, k)
    elems = group_elements(t)
    assert len({e.codes for e in elems}) == 2**k
    for e in elems:
        assert t.implied_sign(e) == e.sign
    for a, b in itertools.islice(itertools.product(elems, repeat=2), 40):
        prod = multiply(a, b)
        assert np.allclose(pauli_matrix(a) @ pauli_matrix(b), pauli_matrix(prod))
        assert t.implied_sign(prod) == prod.sign


@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_reduce_is_canonical(seed, n):
    rng = np.random.default_rng(seed)
    t = _random_group(rng, n, int(rng.integers(0, n + 1)))
    elems = group_elements(t)
    # any spanning subset in any order reduces to the same tableau
    order = rng.permutation(len(elems))
    other = Tableau.from_paulis([elems[i] for i in order], n=n).reduce()
    assert other.rows == t.rows and other.signs == t.signs
    assert gaussian_eliminate(other).same_group(t)


def test_insert_and_reduce_reports_rank_delta():
    t = Tableau.from_paulis([PauliString.from_label("+ZII")]).reduce()
    out, delta = insert_and_reduce(t, [PauliString.from_label("+IZI"), PauliString.from_label("+ZZI")])
    assert delta == 1 and out.rank == 2 and t.rank == 1


@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.data())
def test_subgroup_without_x_matches_filter(seed, n, data):
    rng = np.random.default_rng(seed)
    t = _random_group(rng, n, data.draw(st.integers(0, n)))
    sites = data.draw(st.sets(st.integers(0, n - 1), max_size=n))
    sub = t.subgroup_without_x(sites)
    expected = [e for e in group_elements(t) if all(e.codes[j] in (0, 3) for j in sites)]
    got = group_elements(sub)
    assert sorted((e.codes, e.sign) for e in got) == sorted((e.codes, e.sign) for e in expected)
