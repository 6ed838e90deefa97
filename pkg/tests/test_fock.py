from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from hilbring.errors import SchemaError, UnknownName
from hilbring.fock import (FockVector, annihilate, block_dim, canonicalize, create, degree, fock_space,
                           format_monomial, normalize, parse_monomial, vector_from_json, vector_to_json)
from hilbring.frobenius import builtin
from hilbring.goettsche import poincare_series

VAC = FockVector.vacuum()


def q(model, text):
    return parse_monomial(model, text)


def test_even_factors_commute_and_odd_sign():
    p2, t4 = builtin("p2"), builtin("t4")
    assert normalize(p2, [(1, p2.unit()), (2, p2.cls("h"))]) == q(p2, "q2(h) q1(1)")
    x1, x2 = t4.cls("x1"), t4.cls("x2")
    assert normalize(t4, [(1, x2), (1, x1)]) == normalize(t4, [(1, x1), (1, x2)]).scale(-1)
    a, b = t4.index["x2"], t4.index["x1"]
    s1, m1 = canonicalize(t4, [(1, a), (1, b)])
    s2, m2 = canonicalize(t4, [(1, b), (1, a)])
    assert m1 == m2 and s1 == -s2
    assert canonicalize(t4, [(1, a), (1, a)])[0] == 0


def test_create_examples():
    p2 = builtin("p2")
    v = create(p2, 1, p2.unit(), VAC)
    assert v == q(p2, "q1(1)")
    w = create(p2, 2, p2.cls("h"), v)
    (mono,) = w.terms
    assert sum(m for m, _ in mono) == 3 and degree(p2, mono) == 4
    t4 = builtin("t4")
    x = t4.cls("x1")
    assert create(t4, 1, x, create(t4, 1, x, VAC)).terms == {}


def test_annihilate_examples():
    p2 = builtin("p2")
    assert annihilate(p2, 3, p2.point(), VAC).terms == {}
    assert annihilate(p2, 1, p2.point(), q(p2, "q1(1)")) == VAC.scale(-1)
    assert annihilate(p2, 2, p2.point(), q(p2, "q1(h) q2(1)")) == q(p2, "q1(h)").scale(-2)


@pytest.mark.parametrize("name", ["k3", "t4", "p2", "p1xp1"])
def test_block_dims_match_generating_function(name):
    m = builtin(name)
    s = poincare_series(m.betti(), 3)
    for n in range(4):
        for d in range(4 * n + 1):
            assert block_dim(m, n, d) == s.coeffs[n].get(d, 0)
    assert [block_dim(m, 1, d) for d in range(5)] == list(m.betti())


def test_known_dimensions():
    assert fock_space(builtin("k3")).dim(2) == 324
    assert block_dim(builtin("t4"), 2, 1) == 4


@pytest.mark.parametrize("name", ["t4", "p1xp1"])
@given(data=st.data())
def test_heisenberg_on_vectors(name, data):
    m = builtin(name)
    fs = fock_space(m)
    n = data.draw(st.integers(1, 3))
    mono = data.draw(st.sampled_from(fs.basis(n)))
    v = FockVector({mono: Fraction(1)})
    i, j = data.draw(st.integers(0, m.dim - 1)), data.draw(st.integers(0, m.dim - 1))
    a, b = data.draw(st.integers(1, 2)), data.draw(st.integers(1, 2))
    x, y = m.cls(i), m.cls(j)
    # [q_-a(x), q_b(y)] = -a delta_ab integral(xy)
    sign = -1 if m.parity[i] and m.parity[j] else 1
    lhs = annihilate(m, a, x, create(m, b, y, v)) - create(m, b, y, annihilate(m, a, x, v)).scale(sign)
    from hilbring.frobenius import pairing
    expected = v.scale(-a * pairing(m, x, y)) if a == b else FockVector()
    assert lhs == expected


def test_text_and_json_round_trip():
    k3 = builtin("k3")
    v = q(k3, "q1(e1) q2(pt)").scale(Fraction(3, 2)) + q(k3, "q3(1)")
    assert vector_from_json(k3, vector_to_json(k3, v)) == v
    mono = next(iter(q(k3, "q2(a3) q1(1)").terms))
    assert format_monomial(k3, mono) == "q2(a3) q1(1)"
    with pytest.raises(UnknownName):
        q(k3, "q1(h)")
    with pytest.raises(SchemaError):
        q(k3, "q0(1)")
