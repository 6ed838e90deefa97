from fractions import Fraction
from itertools import permutations

import pytest
from hypothesis import given, strategies as st

from hilbring.cr_orbifold import (SectorElement, age, compare_rings, compose, cr_basis, cr_product, cr_ring,
                                  inverse, orbits)
from hilbring.errors import OddCohomologyUnsupported, PreconditionFailed
from hilbring.fock import fock_space
from hilbring.frobenius import builtin, coproduct

perms = st.integers(1, 6).flatmap(lambda n: st.permutations(list(range(n))).map(tuple))


@given(perms)
def test_age_and_orbits(p):
    assert age(p) == len(p) - len(orbits(p))
    assert sorted(x for o in orbits(p) for x in o) == list(range(len(p)))
    assert compose(p, inverse(p)) == tuple(range(len(p)))


@given(st.integers(1, 5).flatmap(lambda n: st.tuples(*[st.permutations(list(range(n))).map(tuple)] * 3)))
def test_composition_associative(t):
    a, b, c = t
    assert compose(compose(a, b), c) == compose(a, compose(b, c))


@pytest.mark.parametrize("name", ["p2", "k3", "synthetic(2,0,4)"])
def test_basis_sizes(name):
    m = builtin(name)
    for n in (1, 2, 3):
        assert len(cr_basis(m, n)) == fock_space(m).dim(n)


def test_first_sector_and_degree():
    m = builtin("p2")
    ring = cr_ring(m, 1)
    for (i, j), prod in ring.constants.items():
        a, b = ring.basis[i][0][1], ring.basis[j][0][1]
        expected = {ring.basis.index(((1, k),)): v for k, v in m.mul_basis(a, b).items()}
        assert prod == expected
    swap = SectorElement((1, 0), {(0, 1): m.unit()})
    assert swap.age() == 1 and swap.cr_degree(m) == 2


def test_twisted_products():
    m = builtin("k3")
    u = m.unit_index
    x = SectorElement((1, 0), {(0, 1): m.unit()})
    prod = cr_product(m, x, x)
    expected = {((0, 1), key): v for key, v in coproduct(m, 2, m.unit()).terms.items()}
    assert prod == expected
    a = SectorElement((1, 0, 2), {(0, 1): m.unit(), (2,): m.unit()})
    b = SectorElement((0, 2, 1), {(0,): m.unit(), (1, 2): m.unit()})
    assert cr_product(m, a, b) == {((1, 2, 0), (u,)): Fraction(1)}


def test_untwisted_sector_is_symmetric_square():
    m = builtin("p1xp1")
    ia, ib = m.index["a"], m.index["b"]
    x = {((0, 1), (ia, ib)): Fraction(1)}
    y = {((0, 1), (ib, ia)): Fraction(1)}
    pt = m.index["pt"]
    assert cr_product(m, x, y) == {((0, 1), (pt, pt)): Fraction(1)}


def test_compare_first_block_and_obstruction():
    rep = compare_rings(builtin("synthetic(2,0,4)"), 1)
    assert rep.iso_found and rep.residual == 0 and rep.cycle_scalars[1] == (1, 0)
    with pytest.raises(PreconditionFailed):
        compare_rings(builtin("p2"), 2)
    bad = compare_rings(builtin("p2"), 2, allow_c1=True)
    assert not bad.iso_found and bad.residual > 0
    with pytest.raises(OddCohomologyUnsupported):
        compare_rings(builtin("t4"), 2)


def test_symmetrized_elements_are_invariant():
    m = builtin("synthetic(2,0,4)")
    ring = cr_ring(m, 3)
    from hilbring.cr_orbifold import CRCalculus

    calc = CRCalculus(m, 3)
    for elem in ring.elements[:10]:
        for g in permutations(range(3)):
            moved = {}
            for key, v in elem.items():
                k = calc.conjugate(g, key)
                moved[k] = moved.get(k, 0) + v
            assert moved == elem
