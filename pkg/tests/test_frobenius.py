from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from hilbring.errors import DegeneratePairing, GradingViolation, SchemaError, UnknownName
from hilbring.frobenius import (SurfaceClass, TensorClass, builtin, coproduct, cup, dump_surface, integrate,
                                load_surface, multiply_out, pairing, preserves_structure, relabel,
                                tensor_multiply)

NAMES = ["k3", "p2", "p1xp1", "t4", "synthetic(2,0,24)", "synthetic(4,[1,0,2,-1],5)"]

P2_RECORD = {
    "name": "p2-file",
    "basis": [{"name": "1", "degree": 0}, {"name": "h", "degree": 2}, {"name": "pt", "degree": 4}],
    "products": [[1, 1, [{"k": 2, "num": 1}]]],
    "integral": [{"k": 2, "num": 1}],
    "c1": [{"k": 1, "num": 3}],
    "c2": [{"k": 2, "num": 3}],
}


def det(mat):
    n = len(mat)
    a = [[Fraction(x) for x in row] for row in mat]
    d = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if a[r][c]), None)
        if p is None:
            return Fraction(0)
        if p != c:
            a[c], a[p] = a[p], a[c]
            d = -d
        d *= a[c][c]
        for r in range(c + 1, n):
            f = a[r][c] / a[c][c]
            a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return d


def test_p2_record_loads():
    m = load_surface(P2_RECORD)
    h = m.cls("h")
    assert cup(m, h, h) == m.cls("pt")
    assert integrate(m, m.cls("pt")) == 1 and integrate(m, h) == 0
    assert m.betti() == (1, 0, 1, 0, 1)


def test_zero_integral_is_degenerate():
    rec = dict(P2_RECORD, integral=[{"k": 2, "num": 0}])
    with pytest.raises(DegeneratePairing):
        load_surface(rec)


def test_degree_violation_rejected():
    rec = dict(P2_RECORD, products=[[1, 1, [{"k": 1, "num": 1}]]])
    with pytest.raises(GradingViolation):
        load_surface(rec)


def test_malformed_record():
    rec = {k: v for k, v in P2_RECORD.items() if k != "basis"}
    with pytest.raises(SchemaError):
        load_surface(rec)


def test_k3_lattice():
    k3 = builtin("k3")
    assert k3.betti() == (1, 0, 22, 0, 1)
    h2 = [i for i in range(k3.dim) if k3.degrees[i] == 2]
    assert abs(det([[k3.gram[i][j] for j in h2] for i in h2])) == 1
    assert integrate(k3, k3.c2) == 24 and k3.c1.is_zero()
    assert cup(k3, k3.cls("e1"), k3.cls("f1")) == k3.point()


def test_t4_and_p1xp1():
    t4 = builtin("t4")
    assert t4.betti() == (1, 4, 6, 4, 1) and t4.c1.is_zero() and t4.c2.is_zero()
    q = builtin("p1xp1")
    assert q.c1 == q.cls("a", 2) + q.cls("b", 2)
    assert integrate(q, q.c2) == 4 and integrate(q, cup(q, q.c1, q.c1)) == 8


def test_odd_classes_anticommute():
    t4 = builtin("t4")
    x1, x2 = t4.cls("x1"), t4.cls("x2")
    assert cup(t4, x1, x2) == cup(t4, x2, x1).scale(-1)
    assert cup(t4, x1, x1).is_zero()


def test_p2_coproduct():
    m = builtin("p2")
    t = coproduct(m, 2, m.unit())
    i = m.index
    assert t.terms == {(i["1"], i["pt"]): 1, (i["h"], i["h"]): 1, (i["pt"], i["1"]): 1}


@pytest.mark.parametrize("name", NAMES)
def test_trace_identity(name):
    m = builtin(name)
    euler = integrate(m, multiply_out(m, coproduct(m, 2, m.unit())))
    assert euler == m.euler_class_integral()


@pytest.mark.parametrize("name", NAMES)
def test_coproduct_counit(name):
    m = builtin(name)
    for i in range(m.dim):
        t = coproduct(m, 2, m.cls(i))
        back = {}
        for (a, b), v in t.terms.items():
            c = v * m.integral.get(a, 0)
            if c:
                back[b] = back.get(b, 0) + c
        assert SurfaceClass(back) == m.cls(i)


@pytest.mark.parametrize("name", NAMES)
def test_coproduct_arity3_coassociative(name):
    m = builtin(name)
    t3 = coproduct(m, 3, m.unit())
    # (id x tau) tau(1) computed by hand must agree with (tau x id) tau(1)
    other = {}
    for (a, b), v in coproduct(m, 2, m.unit()).terms.items():
        for (p, q), w in m.coproduct_basis(b).items():
            other[(a, p, q)] = other.get((a, p, q), 0) + v * w
    assert t3 == TensorClass(3, other)


def classes(model):
    coeff = st.integers(-3, 3)
    return st.lists(coeff, min_size=model.dim, max_size=model.dim).map(
        lambda cs: SurfaceClass({i: c for i, c in enumerate(cs)}))


@pytest.mark.parametrize("name", ["p2", "t4", "synthetic(4,[1,0,2,-1],5)"])
@given(data=st.data())
def test_ring_axioms_random(name, data):
    m = builtin(name)
    a, b, c = (data.draw(classes(m)) for _ in range(3))
    assert cup(m, cup(m, a, b), c) == cup(m, a, cup(m, b, c))
    assert cup(m, m.unit(), a) == a
    assert pairing(m, a, cup(m, b, c)) == pairing(m, cup(m, a, b), c)


@given(st.integers(0, 12).map(lambda x: 2 * x), st.integers(-30, 30))
def test_synthetic_invariants(b2, e):
    m = builtin(f"synthetic({b2},0,{e})")
    assert m.betti() == (1, 0, b2, 0, 1)
    assert integrate(m, m.c2) == e


def test_synthetic_odd_b2_rejected():
    with pytest.raises(UnknownName):
        builtin("synthetic(3,0,5)")
    with pytest.raises(UnknownName, match="unknown surface"):
        builtin("enriques")


@pytest.mark.parametrize("name", NAMES)
def test_dump_load_round_trip(name):
    m = builtin(name)
    back = load_surface(dump_surface(m))
    assert back.product == m.product and back.integral == m.integral
    assert back.c1 == m.c1 and back.c2 == m.c2 and back.basis == m.basis


def test_relabel_is_isomorphic():
    m = builtin("p1xp1")
    perm = [3, 1, 0, 2]
    r = relabel(m, perm)
    assert r.unit_index == 3 and r.names[0] == "b"
    swap = [0, 2, 1, 3]
    assert preserves_structure(m, swap)
    assert preserves_structure(builtin("p2"), [0, 1, 2])
    assert not preserves_structure(m, [0, 3, 2, 1])
    a = TensorClass(2, {(1, 2): 1})
    assert tensor_multiply(m, a, TensorClass(2, {(2, 1): 1})).terms == {(3, 3): 1}
