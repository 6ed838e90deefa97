from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from oracles import chi_y_hilbert, euler_hilbert, genus_from_numbers, genus_polynomial, y_values
from hilbring.egl_cobordism import (ChernPolynomial, DiagonalEvaluator, EGLConfig, KSymbol, KunnethEvaluator,
                                    SymbolicClass, Truncation, ch_chern_convert, chern_invariants, chern_number,
                                    comparison_classes, diagonal_classes, integrand_on_xm,
                                    parse_chern_polynomial, universal_polynomial)
from hilbring.errors import DegreeMismatch, SchemaError
from hilbring.frobenius import TensorClass, builtin, coproduct, cup, integrate

GEOMETRIC = ["k3", "p2", "p1xp1", "t4"]


def var(*v):
    return SymbolicClass.var(v)


def numbers(model, n, config=None):
    keys = genus_polynomial(0, 2 * n)
    return {k: chern_number(model, n, ChernPolynomial({k: Fraction(1)}), config) for k in keys}


def chi_y_residuals(model, n, config=None):
    x, c = chern_invariants(model)
    nums = numbers(model, n, config)
    return [genus_from_numbers(nums, 2 * n, y) - chi_y_hilbert(x, c, n, y) for y in y_values(2 * n)]


def test_line_element_conversion():
    c1 = var("X", 1, 1)
    trunc = Truncation(6, 10)
    ch = ch_chern_convert("c_to_ch", 4, [SymbolicClass.const(1), c1], rank=1, trunc=trunc)
    term = SymbolicClass.const(1)
    for k in range(5):
        assert ch[k] == term
        term = term.mul(c1, trunc).scale(Fraction(1, k + 1))


def test_rank_zero_second_class():
    ch2 = var("D", 2, 1, 2)
    c = ch_chern_convert("ch_to_c", 2, [SymbolicClass(), SymbolicClass(), ch2], trunc=Truncation(4, 4))
    assert c[1].is_zero() and c[2] == ch2.scale(-1)


@given(st.lists(st.fractions(min_value=-4, max_value=4, max_denominator=5), min_size=12, max_size=12),
       st.integers(-3, 3))
def test_conversion_round_trip(vals, rank):
    c = [Fraction(1)] + vals
    ch = ch_chern_convert("c_to_ch", 12, c, rank=rank)
    assert ch_chern_convert("ch_to_c", 12, ch) == c


@given(st.lists(st.integers(-3, 3), min_size=6, max_size=6))
def test_double_dual(coeffs):
    trunc = Truncation(6, 6)
    k = KSymbol("E", [var("M", i, 1).scale(c) if i else SymbolicClass.const(c) for i, c in enumerate(coeffs)])
    assert k.dual().dual().ch == k.ch and k.dual().dual().name == "E"


def test_comparison_rank_and_first_step():
    syms, chern = comparison_classes(0)
    assert syms["difference"].ch[0] == SymbolicClass.const(2)
    # over X^[1] = X: the incidence classes and l vanish and c(T) remains
    def drop(x):
        return SymbolicClass({k: v for k, v in x.terms.items() if not any(a[0] in ("M", "l") for a, _ in k)})
    assert [drop(c) for c in chern] == [SymbolicClass.const(1), var("X", 1, 1), var("X", 2, 1)]


@pytest.mark.parametrize("name", GEOMETRIC + ["synthetic(4,[1,0,2,-1],5)"])
def test_diagonal_classes(name):
    m = builtin(name)
    d = diagonal_classes(m)
    assert d[0] == TensorClass(2, {(m.unit_index, m.unit_index): 1})
    assert d[1].terms == {}
    assert d[2] == coproduct(m, 2, m.unit()).scale(-1)
    assert diagonal_classes(m, route="grr") == d
    from hilbring.frobenius import tensor_multiply
    for a in range(m.dim):
        for b in range(m.dim):
            t = tensor_multiply(m, coproduct(m, 2, m.unit()), TensorClass(2, {(a, b): 1}))
            val = sum(v * m.integral.get(i, 0) * m.integral.get(j, 0) for (i, j), v in t.terms.items())
            sign = -1 if m.parity[a] and m.parity[b] else 1
            assert val == sign * integrate(m, cup(m, m.cls(a), m.cls(b))) or val == integrate(m, cup(m, m.cls(a), m.cls(b)))


@pytest.mark.parametrize("name", GEOMETRIC + ["synthetic(2,[1,1],7)"])
@pytest.mark.parametrize("poly", ["c1^2", "c2", "c1^2 - 4*c2"])
def test_first_hilbert_scheme_is_the_surface(name, poly):
    m = builtin(name)
    P = parse_chern_polynomial(poly)
    expected = Fraction(0)
    for mono, coeff in P.terms.items():
        cls = m.unit()
        for k, e in mono:
            for _ in range(e):
                cls = cup(m, cls, [m.unit(), m.c1, m.c2][k])
        expected += coeff * integrate(m, cls)
    assert chern_number(m, 1, P) == expected


@pytest.mark.parametrize("name", GEOMETRIC + ["synthetic(2,0,0)", "synthetic(2,0,24)", "synthetic(2,[2,1],11)"])
def test_euler_oracle(name):
    m = builtin(name)
    e = integrate(m, m.c2)
    assert chern_number(m, 2, "c4") == euler_hilbert(e, 2) == e * (e + 3) / 2


@pytest.mark.parametrize("name", ["p2", "k3"])
def test_euler_oracle_n3(name):
    m = builtin(name)
    assert chern_number(m, 3, "c6") == euler_hilbert(integrate(m, m.c2), 3)


@pytest.mark.parametrize("name", ["p2", "k3", "p1xp1", "t4", "synthetic(2,[1,2],9)"])
def test_chi_y_genus_n2(name):
    assert all(r == 0 for r in chi_y_residuals(builtin(name), 2))


@pytest.mark.parametrize("name", ["p2", "k3"])
def test_chi_y_genus_n3(name):
    assert all(r == 0 for r in chi_y_residuals(builtin(name), 3))


def test_rejected_variants_fail_oracles():
    p2 = builtin("p2")
    plain = EGLConfig(sigma_sign="plain")
    nums = numbers(p2, 2, plain)
    todd = genus_from_numbers(nums, 4, 0)
    assert todd.denominator != 1
    assert any(chi_y_residuals(p2, 3, EGLConfig(mu_transfer="literal")))


def test_known_k3_numbers():
    k3 = builtin("k3")
    assert chern_number(k3, 2, "c2^2") == 828
    assert chern_number(k3, 2, "c1*c3") == 0


@pytest.mark.parametrize("name", GEOMETRIC)
def test_evaluators_agree_on_surfaces(name):
    m = builtin(name)
    for P in ["c4", "c2^2", "c1^2*c2", "c1*c3", "c1^4"]:
        integrand = integrand_on_xm(2, P)
        assert DiagonalEvaluator(m, 2).integrate(integrand) == KunnethEvaluator(m, 2).integrate(integrand)


def test_kunneth_sees_algebraic_euler_class():
    # synthetic(2,0,e) has m(tau(1)) = 4 pt whatever e is
    m = builtin("synthetic(2,0,24)")
    assert chern_number(m, 2, "c4", EGLConfig(evaluation="kunneth")) == 344
    assert chern_number(m, 2, "c4") == 324


@given(st.integers(0, 10 ** 6))
def test_reduction_order_does_not_matter(seed):
    m = builtin("p1xp1")
    base = chern_number(m, 2, "c1^2*c2 + 2*c1*c3 - c2^2")
    assert chern_number(m, 2, "c1^2*c2 + 2*c1*c3 - c2^2", EGLConfig(shuffle_seed=seed)) == base


@pytest.mark.parametrize("P", ["c4", "c1^2*c2", "c2^2"])
def test_pruning_is_sound(P):
    m = builtin("p2")
    assert chern_number(m, 2, P, EGLConfig(prune=False)) == chern_number(m, 2, P)


def test_universal_polynomials():
    assert universal_polynomial(1, "c2").terms == {(0, 1): 1}
    assert universal_polynomial(1, "c1^2").terms == {(1, 0): 1}
    up = universal_polynomial(2, "c4")
    assert up.terms == {(0, 2): Fraction(1, 2), (0, 1): Fraction(3, 2)}
    assert up.evaluate(0, 24) == 324
    assert all(h[3] == h[4] for h in up.held_out)


def test_degree_and_parse_errors():
    with pytest.raises(DegreeMismatch):
        chern_number(builtin("p2"), 2, "c2")
    with pytest.raises(DegreeMismatch):
        chern_number(builtin("p2"), 2, "c4 + c1")
    for bad in ["", "c0^2", "c2 * x", "c1^^2"]:
        with pytest.raises(SchemaError):
            parse_chern_polynomial(bad)
    assert parse_chern_polynomial("T1^2*T2 - 3/2*c4").terms == {((1, 2), (2, 1)): 1, ((4, 1),): Fraction(-3, 2)}


def test_config_rejects_unknown_options():
    with pytest.raises(ValueError):
        EGLConfig(sigma_sign="proof")
    with pytest.raises(ValueError):
        EGLConfig(evaluation="naive")
