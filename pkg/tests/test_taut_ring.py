from fractions import Fraction
from math import factorial

import pytest
from hypothesis import given, strategies as st

from hilbring.cr_orbifold import _cycle_type, _scalar_power, compare_rings, cr_ring
from hilbring.fock import FockVector, create, fock_space, parse_monomial, unit_vector
from hilbring.frobenius import builtin
from hilbring.heisenberg import calculus
from hilbring.taut_ring import (TautConfig, cup, g_class, intersection_form, mult_operator, ring_table,
                                taut_calculus, verify_ring_table, word_basis)

VAC = FockVector.vacuum()
WORDS = TautConfig(method="words")


def q(model, text):
    return parse_monomial(model, text)


@pytest.mark.parametrize("name,n,dim", [("p2", 1, 3), ("p2", 2, 9), ("t4", 2, 144), ("k3", 2, 324)])
def test_word_basis_spans(name, n, dim):
    words, vecs, solver = word_basis(builtin(name), n)
    assert len(words) == dim
    v = unit_vector(builtin(name), n)
    coords = solver(v)
    rebuilt = {}
    for t, c in coords.items():
        for j, x in vecs[t].items():
            rebuilt[j] = rebuilt.get(j, 0) + c * x
    assert {k: v for k, v in rebuilt.items() if v} == fock_space(builtin(name)).vector_to_dict(v, n)


def test_g_class_examples():
    m = builtin("p1xp1")
    for a in range(m.dim):
        alpha = m.cls(a)
        assert g_class(m, 0, alpha, 1) == create(m, 1, alpha, VAC)
        for k in (1, 2):
            assert g_class(m, k, alpha, 1).terms == {}
        for n in (2, 3):
            expected = create(m, 1, alpha, q(m, " ".join(["q1(1)"] * (n - 1)))).scale(Fraction(1, factorial(n - 1)))
            assert g_class(m, 0, alpha, n) == expected
    assert g_class(m, 1, m.unit(), 2) == q(m, "q2(1)").scale(Fraction(-1, 2))


@pytest.mark.parametrize("name", ["p2", "t4", "k3"])
def test_s0_is_cup_with_alpha_on_first_block(name):
    m = builtin(name)
    for a in range(m.dim):
        for b in range(m.dim):
            from hilbring.frobenius import cup as cup_x
            op = mult_operator(m, 0, {a: 1}, 1).matrix
            fs = fock_space(m)
            v = create(m, 1, m.cls(b), VAC)
            got = fs.dict_to_vector(op.apply(fs.vector_to_dict(v, 1)), 1)
            assert got == create(m, 1, cup_x(m, m.cls(a), m.cls(b)), VAC)


@pytest.mark.parametrize("name,n", [("p2", 2), ("p2", 3), ("t4", 2), ("p1xp1", 2)])
def test_words_route_agrees_with_recursion(name, n):
    m = builtin(name)
    rec, words = taut_calculus(m), taut_calculus(m, WORDS)
    for k in range(2 * n + 1):
        for a in range(m.dim):
            assert rec.mult(k, {a: 1}, n) == words.mult(k, {a: 1}, n)


def test_unit_and_p2_products():
    m = builtin("p2")
    for n in (1, 2, 3):
        one = unit_vector(m, n)
        for mono in fock_space(m).basis(n):
            w = FockVector({mono: Fraction(1)})
            assert cup(m, n, one, w) == w
    g = g_class(m, 0, m.cls("h"), 2)
    sq = cup(m, 2, g, g)
    for mono in fock_space(m).basis(2):
        u = FockVector({mono: Fraction(1)})
        assert cup(m, 2, cup(m, 2, g, g), u) == cup(m, 2, g, cup(m, 2, g, u))
    assert sq == cup(m, 2, g, g)


@pytest.mark.parametrize("name", ["p2", "t4", "k3"])
def test_first_block_is_the_surface(name):
    m = builtin(name)
    table = ring_table(m, 1)
    pos = {mono[0][1]: i for i, mono in enumerate(table.basis)}
    for (i, j), prod in m.product.items():
        got = table.product(pos[i], pos[j])
        assert got == {pos[k]: v for k, v in prod.items() if v}
        assert table.form.get((pos[i], pos[j]), 0) == m.gram[i][j]


def test_p2_n2_form_frobenius():
    m = builtin("p2")
    checks = verify_ring_table(m, ring_table(m, 2))
    assert all(ok for ok, _ in checks.values()), checks


def test_k3_cup_through_orbifold_isomorphism():
    k3 = builtin("k3")
    table = ring_table(k3, 2)
    rep = compare_rings(k3, 2, hilbert_table=table)
    cr = cr_ring(k3, 2)
    idx = fock_space(k3).index(2)
    v = q(k3, "q2(1)")
    (mono,) = v.terms
    i = idx[mono]
    hilb = fock_space(k3).vector_to_dict(cup(k3, 2, v, v), 2)
    types = [_cycle_type(2, b) for b in cr.basis]
    via_cr = {}
    for k, c in cr.constants[(i, i)].items():
        factor = _scalar_power(rep.cycle_scalars, [2 * types[i][r] - types[k][r] for r in range(3)])
        assert factor[1] == 0
        via_cr[k] = c * factor[0]
    assert hilb == via_cr


def small_vectors(model, n):
    basis = fock_space(model).basis(n)
    return st.dictionaries(st.sampled_from(basis), st.integers(-2, 2), max_size=3).map(
        lambda d: FockVector({k: Fraction(v) for k, v in d.items()}))


@pytest.mark.parametrize("name", ["p2", "t4"])
@given(data=st.data())
def test_cup_ring_axioms_random(name, data):
    m = builtin(name)
    n = 2
    u, v, w = (data.draw(small_vectors(m, n)) for _ in range(3))
    assert cup(m, n, cup(m, n, u, v), w) == cup(m, n, u, cup(m, n, v, w))
    assert intersection_form(m, n, cup(m, n, u, v), w) == intersection_form(m, n, u, cup(m, n, v, w))


@given(data=st.data())
def test_cup_super_commutative_on_torus(data):
    m = builtin("t4")
    fs = fock_space(m)
    a, b = data.draw(st.sampled_from(fs.basis(2))), data.draw(st.sampled_from(fs.basis(2)))
    pa = sum(m.parity[i] for _, i in a) % 2
    pb = sum(m.parity[i] for _, i in b) % 2
    va, vb = FockVector({a: Fraction(1)}), FockVector({b: Fraction(1)})
    assert cup(m, 2, va, vb) == cup(m, 2, vb, va).scale(-1 if pa and pb else 1)
