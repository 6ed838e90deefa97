"""Chern numbers of X^[n] by the nested Hilbert scheme recursion.

Integrals over X^[n] x X^m are rewritten step by step: pull back along
X^[n,n-1] -> X^[n] (degree n), express everything through l, c_i(X),
d_i and the incidence classes mu_i, then push forward to X^[n-1] x X^(m+1)
with sigma_*(l^a) = (-1)^a mu_a.  At n = 0 only d_i and c_i(X) remain and
the integral over X^m is evaluated in the Kuenneth algebra of the model.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct
from math import factorial
from typing import Optional

from .errors import DegreeMismatch, InterpolationInconsistent, SchemaError
from .frobenius import (
    SurfaceClass,
    SurfaceModel,
    TensorClass,
    builtin,
    coproduct,
    cup,
    integrate,
    synthetic,
    tensor_multiply,
)


@dataclass(frozen=True)
class EGLConfig:
    """mu_transfer: "k_theory" uses c(nu* O) = c(lambda* O) c(L O_Delta);
    "literal" adds sum_k l^k d_(i-k) to mu_i.
    sigma_sign: "alternating" gives sigma_*(l^a) = (-1)^a mu_a, "plain" drops the sign.
    evaluation: "diagonal" intersects diagonal strata with excess bundle T_X, so
    Delta_*(a) Delta_*(b) = Delta_*(a b c2); "kunneth" multiplies in H*(X)^(x m),
    where the self-intersection of the diagonal is m(tau(1)) instead of c2.
    """

    mu_transfer: str = "k_theory"
    sigma_sign: str = "alternating"
    prune: bool = True
    shuffle_seed: Optional[int] = None
    evaluation: str = "diagonal"

    def __post_init__(self):
        for name, allowed in (("mu_transfer", ("k_theory", "literal")), ("sigma_sign", ("alternating", "plain")),
                              ("evaluation", ("diagonal", "kunneth"))):
            if getattr(self, name) not in allowed:
                raise ValueError(f"{name} must be one of {allowed}")


# symbolic polynomials

def var_degree(v) -> int:
    return 1 if v[0] == "l" else v[1]


class SymbolicClass:
    """Polynomial with rational coefficients; monomials are sorted tuples of (var, exp)."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {k: Fraction(v) for k, v in (terms or {}).items() if v}

    @classmethod
    def const(cls, c) -> "SymbolicClass":
        return cls({(): Fraction(c)}) if c else cls()

    @classmethod
    def var(cls, v, c=1) -> "SymbolicClass":
        if v[0] in ("C", "M", "D", "X") and v[1] == 0:
            return cls.const(c)
        return cls({((v, 1),): Fraction(c)})

    def __add__(self, other):
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return SymbolicClass(out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        c = Fraction(c)
        return SymbolicClass({k: v * c for k, v in self.terms.items()})

    def is_zero(self):
        return not self.terms

    def mul(self, other, trunc=None):
        out = {}
        for ka, va in self.terms.items():
            for kb, vb in other.terms.items():
                key = _merge(ka, kb)
                if trunc is not None and not trunc.keep(key):
                    continue
                out[key] = out.get(key, 0) + va * vb
        return SymbolicClass(out)

    def degree_part(self, d):
        return SymbolicClass({k: v for k, v in self.terms.items() if mono_degree(k) == d})

    def max_degree(self):
        return max((mono_degree(k) for k in self.terms), default=0)

    def __eq__(self, other):
        return isinstance(other, SymbolicClass) and self.terms == other.terms

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for k, v in sorted(self.terms.items(), key=lambda kv: str(kv[0])):
            name = "*".join(_var_name(x) + (f"^{e}" if e > 1 else "") for x, e in k) or "1"
            parts.append(f"{v}*{name}")
        return " + ".join(parts)


def _var_name(v):
    if v[0] == "l":
        return "l"
    return v[0] + "_".join(str(x) for x in v[1:])


def _merge(a, b):
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def mono_degree(mono) -> int:
    return sum(var_degree(v) * e for v, e in mono)


class Truncation:
    """Drops monomials that vanish for dimension reasons."""

    def __init__(self, top: int, hilb_dim: int, prune: bool = True):
        self.top, self.hilb_dim, self.prune = top, hilb_dim, prune

    def keep(self, mono) -> bool:
        if mono_degree(mono) > self.top:
            return False
        if not self.prune:
            return True
        cdeg = 0
        per_factor = {}
        for v, e in mono:
            if v[0] == "C":
                cdeg += v[1] * e
            elif v[0] == "X":
                per_factor[v[2]] = per_factor.get(v[2], 0) + v[1] * e
        if cdeg > self.hilb_dim:
            return False
        return all(x <= 2 for x in per_factor.values())


def _power(x: SymbolicClass, k: int, trunc) -> SymbolicClass:
    out = SymbolicClass.const(1)
    for _ in range(k):
        out = out.mul(x, trunc)
    return out


def _exp_series(x: SymbolicClass, top: int, trunc, sign=1) -> list:
    """Graded pieces of exp(sign * x) for x homogeneous of degree 1."""
    pieces = [SymbolicClass() for _ in range(top + 1)]
    term = SymbolicClass.const(1)
    for k in range(top + 1):
        pieces[k] = pieces[k] + term
        term = term.mul(x, trunc).scale(Fraction(sign, k + 1))
    return pieces


def _series_mul(a: list, b: list, top: int, trunc) -> list:
    out = [SymbolicClass() for _ in range(top + 1)]
    for i, x in enumerate(a):
        if x.is_zero():
            continue
        for j, y in enumerate(b):
            if i + j > top or y.is_zero():
                continue
            out[i + j] = out[i + j] + x.mul(y, trunc)
    return out


def ch_chern_convert(direction: str, truncation: int, vector: list, rank=0, trunc=None) -> list:
    """Newton identities between total Chern class and Chern character.

    direction "c_to_ch": vector = [c_0=1, c_1, ..., c_T] -> [ch_0=rank, ch_1, ...].
    direction "ch_to_c": vector = [ch_0, ch_1, ..., ch_T] -> [1, c_1, ...].
    Entries may be SymbolicClass, Fraction or any ring element supporting
    +, scalar multiplication via `scale`/`*` and a product `mul_fn`.
    """
    ring = _ring_of(vector, trunc)
    T = truncation
    vec = list(vector) + [ring.zero()] * (T + 1 - len(vector))
    if direction == "c_to_ch":
        e = vec
        p = [ring.zero()] * (T + 1)
        for k in range(1, T + 1):
            acc = ring.scale(e[k], (-1) ** (k - 1) * k)
            for i in range(1, k):
                acc = ring.add(acc, ring.scale(ring.mul(e[k - i], p[i]), (-1) ** (k - 1 + i)))
            p[k] = acc
        out = [ring.const(rank)] + [ring.scale(p[k], Fraction(1, factorial(k))) for k in range(1, T + 1)]
        return out
    if direction == "ch_to_c":
        p = [ring.zero()] + [ring.scale(vec[k], factorial(k)) for k in range(1, T + 1)]
        e = [ring.const(1)] + [ring.zero()] * T
        for k in range(1, T + 1):
            acc = ring.zero()
            for i in range(1, k + 1):
                acc = ring.add(acc, ring.scale(ring.mul(e[k - i], p[i]), (-1) ** (i - 1)))
            e[k] = ring.scale(acc, Fraction(1, k))
        return e
    raise ValueError(f"unknown direction {direction!r}")


class _SymRing:
    def __init__(self, trunc):
        self.trunc = trunc

    def zero(self):
        return SymbolicClass()

    def const(self, c):
        return SymbolicClass.const(c)

    def add(self, a, b):
        return a + b

    def scale(self, a, c):
        return a.scale(c)

    def mul(self, a, b):
        return a.mul(b, self.trunc)


class _FracRing:
    def zero(self):
        return Fraction(0)

    def const(self, c):
        return Fraction(c)

    def add(self, a, b):
        return a + b

    def scale(self, a, c):
        return a * Fraction(c)

    def mul(self, a, b):
        return a * b


class _TensorRing:
    def __init__(self, model, arity):
        self.model, self.arity = model, arity

    def zero(self):
        return TensorClass(self.arity, {})

    def const(self, c):
        return TensorClass(self.arity, {tuple([self.model.unit_index] * self.arity): Fraction(c)})

    def add(self, a, b):
        return a + b

    def scale(self, a, c):
        return a.scale(c)

    def mul(self, a, b):
        return tensor_multiply(self.model, a, b)


def _ring_of(vector, trunc):
    for x in vector:
        if isinstance(x, SymbolicClass):
            return _SymRing(trunc)
        if isinstance(x, TensorClass):
            raise TypeError("pass a _TensorRing explicitly for tensor classes")
    return _FracRing()


def _convert_with(ring, direction, T, vector, rank=0):
    """Same as ch_chern_convert with an explicit ring."""
    vec = list(vector) + [ring.zero()] * (T + 1 - len(vector))
    if direction == "c_to_ch":
        p = [ring.zero()] * (T + 1)
        for k in range(1, T + 1):
            acc = ring.scale(vec[k], (-1) ** (k - 1) * k)
            for i in range(1, k):
                acc = ring.add(acc, ring.scale(ring.mul(vec[k - i], p[i]), (-1) ** (k - 1 + i)))
            p[k] = acc
        return [ring.const(rank)] + [ring.scale(p[k], Fraction(1, factorial(k))) for k in range(1, T + 1)]
    p = [ring.zero()] + [ring.scale(vec[k], factorial(k)) for k in range(1, T + 1)]
    e = [ring.const(1)] + [ring.zero()] * T
    for k in range(1, T + 1):
        acc = ring.zero()
        for i in range(1, k + 1):
            acc = ring.add(acc, ring.scale(ring.mul(e[k - i], p[i]), (-1) ** (i - 1)))
        e[k] = ring.scale(acc, Fraction(1, k))
    return e


# K-theory symbols

@dataclass
class KSymbol:
    """Formal K-class as its graded Chern character (ch_0, ch_1, ...)."""

    name: str
    ch: list

    def dual(self) -> "KSymbol":
        name = self.name[:-2] if self.name.endswith("^v") else self.name + "^v"
        return KSymbol(name, [x.scale((-1) ** k) for k, x in enumerate(self.ch)])

    def __add__(self, other):
        n = max(len(self.ch), len(other.ch))
        a = self.ch + [SymbolicClass()] * (n - len(self.ch))
        b = other.ch + [SymbolicClass()] * (n - len(other.ch))
        return KSymbol(f"({self.name}+{other.name})", [x + y for x, y in zip(a, b)])

    def __neg__(self):
        return KSymbol(f"-{self.name}", [x.scale(-1) for x in self.ch])

    def __sub__(self, other):
        return self + (-other)

    def times(self, other, top, trunc):
        return KSymbol(f"{self.name}*{other.name}", _series_mul(self.ch, other.ch, top, trunc))


def line_symbol(name, c1: SymbolicClass, top, trunc) -> KSymbol:
    return KSymbol(name, _exp_series(c1, top, trunc))


def _ch_from_chern_vars(kind, pair, top, trunc, rank=0):
    """ch of a rank-0 element whose Chern classes are the variables kind(i, *pair)."""
    c = [SymbolicClass.const(1)] + [SymbolicClass.var((kind, i) + pair) for i in range(1, top + 1)]
    return _convert_with(_SymRing(trunc), "c_to_ch", top, c, rank)


def comparison_classes(n: int, m: int = 0, top: Optional[int] = None, trunc=None):
    """KSymbols of the identity for X^[n+1,n] x X^m, and the Chern classes of
    the difference nu*T_(n+1) - lambda*T_n as a list of SymbolicClass.

    Variables: l, X(i,1) = rho* c_i(X), M(i,1) = sigma* mu_(i,n).
    """
    if top is None:
        top = 2 * (n + 1) + 2 * m
    if trunc is None:
        trunc = Truncation(top, 2 * n)
    l = SymbolicClass.var(("l",))
    c1 = SymbolicClass.var(("X", 1, 1))
    c2 = SymbolicClass.var(("X", 2, 1))
    L = line_symbol("L", l, top, trunc)
    Kv = line_symbol("K^v", c1, top, trunc)
    O_W = KSymbol("O_W", [SymbolicClass.const(1)])
    chT = _convert_with(_SymRing(trunc), "c_to_ch", top, [SymbolicClass.const(1), c1, c2], 2)
    T = KSymbol("T", chT)
    O = KSymbol("O_n", _ch_from_chern_vars("M", (1,), top, trunc, 0))
    diff = L + L.dual().times(Kv, top, trunc) - (O_W - T + Kv) - L.times(O.dual(), top, trunc) \
        - L.dual().times(Kv, top, trunc).times(O, top, trunc)
    chern = _convert_with(_SymRing(trunc), "ch_to_c", top, diff.ch)
    return {"L": L, "K^v": Kv, "T": T, "O_n": O, "difference": diff}, chern


def mu_transfer(i: int, k: int, cfg: EGLConfig, top, trunc) -> SymbolicClass:
    """(nu,id)* mu_(i,n+1) on (0,k) in terms of level-n classes (factors shifted by one)."""
    l = SymbolicClass.var(("l",))
    if cfg.mu_transfer == "literal":
        out = SymbolicClass.var(("M", i, k + 1))
        for a in range(i + 1):
            out = out + _power(l, a, trunc).mul(SymbolicClass.var(("D", i - a, 1, k + 1)), trunc)
        return out
    chd = _ch_from_chern_vars("D", (1, k + 1), top, trunc, 0)
    twisted = _series_mul(_exp_series(l, top, trunc), chd, top, trunc)
    c_lod = _convert_with(_SymRing(trunc), "ch_to_c", top, twisted)
    out = SymbolicClass()
    for j in range(0, i + 1):
        if j < len(c_lod):
            out = out + SymbolicClass.var(("M", i - j, k + 1)).mul(c_lod[j], trunc)
    return out


def _substitute(poly: SymbolicClass, images, trunc, rng=None) -> SymbolicClass:
    out = {}
    powers = {}
    for mono, coeff in poly.terms.items():
        factors = list(mono)
        if rng is not None:
            rng.shuffle(factors)
        acc = SymbolicClass.const(coeff)
        for v, e in factors:
            key = (v, e)
            if key not in powers:
                powers[key] = _power(images(v), e, trunc)
            acc = acc.mul(powers[key], trunc)
            if acc.is_zero():
                break
        for k, x in acc.terms.items():
            out[k] = out.get(k, 0) + x
    return SymbolicClass(out)


def reduction_step(poly: SymbolicClass, N: int, m: int, cfg: EGLConfig, rng=None) -> SymbolicClass:
    """Integrand on X^[N] x X^m  ->  integrand on X^[N-1] x X^(m+1)."""
    top = 2 * N + 2 * m
    trunc = Truncation(top, 2 * (N - 1), cfg.prune) if cfg.prune else Truncation(top, 10 ** 9, False)
    _, dc = comparison_classes(N - 1, m, top, trunc)
    cache = {}

    def image(v):
        if v in cache:
            return cache[v]
        kind = v[0]
        if kind == "C":
            i = v[1]
            out = SymbolicClass()
            for j in range(0, i + 1):
                if i - j > 2 * (N - 1):
                    continue
                if j < len(dc):
                    out = out + SymbolicClass.var(("C", i - j)).mul(dc[j], trunc)
        elif kind == "M":
            out = mu_transfer(v[1], v[2], cfg, top, trunc)
        elif kind == "D":
            out = SymbolicClass.var(("D", v[1], v[2] + 1, v[3] + 1))
        elif kind == "X":
            out = SymbolicClass.var(("X", v[1], v[2] + 1))
        else:
            raise ValueError(f"unexpected variable {v}")
        cache[v] = out
        return out

    pulled = _substitute(poly, image, trunc, rng)
    # push forward along (sigma, id): l^a -> (+-1)^a mu_a on (0,1), degree factor 1/N
    out = {}
    for mono, c in pulled.terms.items():
        a = 0
        rest = []
        for v, e in mono:
            if v[0] == "l":
                a = e
            else:
                rest.append((v, e))
        if a == 0:
            key = tuple(rest)
            coeff = c
        else:
            sign = (-1) ** a if cfg.sigma_sign == "alternating" else 1
            key = _merge(tuple(rest), ((("M", a, 1), 1),))
            coeff = c * sign
        out[key] = out.get(key, 0) + coeff / N
    return SymbolicClass(out)


# concrete evaluation on X^m

def diagonal_classes(model: SurfaceModel, route: str = "todd_inverse") -> list:
    """d_0..d_4: Chern classes of O_Delta as classes in H*(X x X).

    route "todd_inverse": ch(O_Delta) = Delta_*(td^-1).
    route "grr": ch(O_Delta) = Delta_*(td) / (td x td).
    """
    c1, c2 = model.c1, model.c2
    one = model.unit()
    c1sq = cup(model, c1, c1)
    td = [one, c1.scale(Fraction(1, 2)), (c1sq + c2).scale(Fraction(1, 12))]
    tdinv = [one, c1.scale(Fraction(-1, 2)), (c1sq.scale(2) - c2).scale(Fraction(1, 12))]
    ring = _TensorRing(model, 2)
    ch = [ring.zero() for _ in range(5)]
    if route == "todd_inverse":
        for k, x in enumerate(tdinv):
            if not x.is_zero():
                ch[k + 2] = ch[k + 2] + coproduct(model, 2, x)
    elif route == "grr":
        push = [ring.zero() for _ in range(5)]
        for k, x in enumerate(td):
            if not x.is_zero():
                push[k + 2] = push[k + 2] + coproduct(model, 2, x)
        # (td^-1 x td^-1) as graded pieces
        inv_pieces = [ring.zero() for _ in range(5)]
        u = model.unit_index
        for a, x in enumerate(tdinv):
            for b, y in enumerate(tdinv):
                t = {}
                for i, xv in x.coeffs.items():
                    for j, yv in y.coeffs.items():
                        t[(i, j)] = t.get((i, j), 0) + xv * yv
                if a + b <= 4:
                    inv_pieces[a + b] = inv_pieces[a + b] + TensorClass(2, t)
        for i in range(5):
            for j in range(5 - i):
                if push[i].terms and inv_pieces[j].terms:
                    ch[i + j] = ch[i + j] + tensor_multiply(model, push[i], inv_pieces[j])
    else:
        raise ValueError(f"unknown route {route!r}")
    return _convert_with(ring, "ch_to_c", 4, ch)


class KunnethEvaluator:
    def __init__(self, model: SurfaceModel, m: int):
        self.model, self.m = model, m
        self.d = diagonal_classes(model)
        self._cache = {}

    def _place(self, t: TensorClass, slots) -> TensorClass:
        u = self.model.unit_index
        out = {}
        for key, v in t.terms.items():
            full = [u] * self.m
            for s, idx in zip(slots, key):
                full[s - 1] = idx
            out[tuple(full)] = out.get(tuple(full), 0) + v
        return TensorClass(self.m, out)

    def var_class(self, v) -> TensorClass:
        if v in self._cache:
            return self._cache[v]
        model = self.model
        if v[0] == "X":
            cls = [model.unit(), model.c1, model.c2][v[1]] if v[1] <= 2 else SurfaceClass()
            t = self._place(TensorClass(1, {(i,): c for i, c in cls.coeffs.items()}), (v[2],))
        elif v[0] == "D":
            t = self._place(self.d[v[1]], (v[2], v[3])) if v[1] <= 4 else TensorClass(self.m, {})
        else:
            raise ValueError(f"variable {v} cannot be evaluated on X^m")
        self._cache[v] = t
        return t

    def integrate(self, poly: SymbolicClass) -> Fraction:
        total = Fraction(0)
        u = tuple([self.model.unit_index] * self.m)
        for mono, c in poly.terms.items():
            if any(v[0] in ("C", "M", "l") for v, _ in mono):
                continue  # vanish on the point X^[0]
            if mono_degree(mono) != 2 * self.m:
                continue
            acc = TensorClass(self.m, {u: Fraction(1)})
            for v, e in mono:
                for _ in range(e):
                    acc = tensor_multiply(self.model, acc, self.var_class(v))
                    if not acc.terms:
                        break
            val = Fraction(0)
            for key, x in acc.terms.items():
                p = x
                for i in key:
                    p *= self.model.integral.get(i, 0)
                val += p
            total += c * val
        return total


class _DiagonalRing:
    """Elements r + Delta_*(a) of H*(X x X), a in H*(X), as pairs (r, a)."""

    def __init__(self, model):
        self.model = model

    def zero(self):
        return (Fraction(0), SurfaceClass())

    def const(self, c):
        return (Fraction(c), SurfaceClass())

    def add(self, x, y):
        return (x[0] + y[0], x[1] + y[1])

    def scale(self, x, c):
        return (x[0] * Fraction(c), x[1].scale(c))

    def mul(self, x, y):
        ab = cup(self.model, cup(self.model, x[1], y[1]), self.model.c2)
        return (x[0] * y[0], x[1].scale(y[0]) + y[1].scale(x[0]) + ab)


def diagonal_pushforward_classes(model: SurfaceModel) -> list:
    """d_i written as r_i + Delta_*(delta_i), delta_i polynomial in c1, c2."""
    c1 = model.c1
    c1sq = cup(model, c1, c1)
    tdinv = [model.unit(), c1.scale(Fraction(-1, 2)), (c1sq.scale(2) - model.c2).scale(Fraction(1, 12))]
    ring = _DiagonalRing(model)
    ch = [ring.zero(), ring.zero()] + [(Fraction(0), x) for x in tdinv]
    return _convert_with(ring, "ch_to_c", 4, ch)


class DiagonalEvaluator:
    """Integrals over X^m of monomials in d_i(k,l) and c_i(X)_k.

    A state is a set partition of the factors, one class of H*(X) per block,
    standing for the pushforward from the partition diagonal.  Meeting a
    diagonal Delta_kl inside a block contributes the excess class c2.
    """

    def __init__(self, model: SurfaceModel, m: int):
        self.model, self.m = model, m
        self.d = diagonal_pushforward_classes(model)
        self.chern = [model.unit(), model.c1, model.c2]

    def _monomial(self, mono) -> Fraction:
        model = self.model
        # states: {partition (tuple of frozensets): (coeff, {block: class})}
        states = [(Fraction(1), {frozenset([k]): model.unit() for k in range(1, self.m + 1)})]
        for v, e in mono:
            for _ in range(e):
                new = []
                for coeff, blocks in states:
                    if v[0] == "X":
                        if v[1] > 2:
                            continue
                        b = next(b for b in blocks if v[2] in b)
                        nb = dict(blocks)
                        nb[b] = cup(model, nb[b], self.chern[v[1]])
                        if not nb[b].is_zero():
                            new.append((coeff, nb))
                        continue
                    if v[1] > 4:
                        continue
                    r, a = self.d[v[1]]
                    if r:
                        new.append((coeff * r, blocks))
                    if a.is_zero():
                        continue
                    bk = next(b for b in blocks if v[2] in b)
                    bl = next(b for b in blocks if v[3] in b)
                    nb = dict(blocks)
                    if bk == bl:
                        nb[bk] = cup(model, cup(model, nb[bk], a), model.c2)
                    else:
                        x = cup(model, cup(model, nb.pop(bk), nb.pop(bl)), a)
                        nb[bk | bl] = x
                    if all(not c.is_zero() for c in nb.values()):
                        new.append((coeff, nb))
                states = new
        total = Fraction(0)
        for coeff, blocks in states:
            p = coeff
            for c in blocks.values():
                p *= integrate(model, c)
                if not p:
                    break
            total += p
        return total

    def integrate(self, poly: SymbolicClass) -> Fraction:
        total = Fraction(0)
        for mono, c in poly.terms.items():
            if any(v[0] in ("C", "M", "l") for v, _ in mono):
                continue
            if mono_degree(mono) != 2 * self.m:
                continue
            total += c * self._monomial(mono)
        return total


# Chern polynomials

@dataclass
class ChernPolynomial:
    """sum coeff * prod c_k^e as {((k, e), ...): coeff}."""

    terms: dict = field(default_factory=dict)

    def weighted_degree(self):
        degs = {sum(k * e for k, e in mono) for mono in self.terms}
        return degs

    def to_symbolic(self) -> SymbolicClass:
        out = {}
        for mono, c in self.terms.items():
            key = tuple(sorted((("C", k), e) for k, e in mono if k > 0))
            out[key] = out.get(key, 0) + c
        return SymbolicClass(out)


_TERM = re.compile(r"^(?:(?P<coef>\d+(?:/\d+)?)\*?)?(?P<body>.*)$")


def parse_chern_polynomial(text: str) -> ChernPolynomial:
    """Parse e.g. "c1^2*c2 + 3/2*c4 - c2^2"; T_k is accepted for c_k."""
    s = text.replace(" ", "").replace("T", "c")
    if not s:
        raise SchemaError("empty polynomial")
    s = s.replace("-", "+-")
    terms = {}
    for raw in s.split("+"):
        if not raw:
            continue
        sign = 1
        while raw.startswith("-"):
            sign, raw = -sign, raw[1:]
        coef = Fraction(1)
        factors = {}
        for tok in raw.split("*"):
            if not tok:
                raise SchemaError(f"cannot parse polynomial {text!r}")
            mt = re.fullmatch(r"c(\d+)(?:\^(\d+))?", tok)
            if mt:
                k, e = int(mt.group(1)), int(mt.group(2) or 1)
                if k < 1:
                    raise SchemaError(f"Chern class index must be positive in {text!r}")
                factors[k] = factors.get(k, 0) + e
                continue
            try:
                coef *= Fraction(tok)
            except (ValueError, ZeroDivisionError) as exc:
                raise SchemaError(f"cannot parse token {tok!r} in {text!r}") from exc
        key = tuple(sorted(factors.items()))
        terms[key] = terms.get(key, 0) + sign * coef
    return ChernPolynomial({k: v for k, v in terms.items() if v})


def _as_poly(P) -> ChernPolynomial:
    return parse_chern_polynomial(P) if isinstance(P, str) else P


def chern_number(model: SurfaceModel, n: int, P, config: EGLConfig | None = None) -> Fraction:
    """Integral over X^[n] of a weighted-degree-2n polynomial in c_i(X^[n])."""
    cfg = config or EGLConfig()
    P = _as_poly(P)
    degs = P.weighted_degree()
    if degs and degs != {2 * n}:
        raise DegreeMismatch(f"polynomial has weighted degrees {sorted(degs)}, need {2 * n} (real degree {4 * n})")
    if n == 0:
        return P.terms.get((), Fraction(0))
    rng = random.Random(cfg.shuffle_seed) if cfg.shuffle_seed is not None else None
    poly = P.to_symbolic()
    for N in range(n, 0, -1):
        poly = reduction_step(poly, N, n - N, cfg, rng)
    evaluator = KunnethEvaluator if cfg.evaluation == "kunneth" else DiagonalEvaluator
    return evaluator(model, n).integrate(poly)


def integrand_on_xm(n: int, P, config: EGLConfig | None = None) -> SymbolicClass:
    """The fully reduced integrand on X^n (in d_i and c_i(X) variables)."""
    cfg = config or EGLConfig()
    poly = _as_poly(P).to_symbolic()
    for N in range(n, 0, -1):
        poly = reduction_step(poly, N, n - N, cfg)
    return SymbolicClass({k: v for k, v in poly.terms.items() if not any(x[0] in ("C", "M", "l") for x, _ in k)})


# universal polynomials

@dataclass
class UniversalPolynomial:
    n: int
    terms: dict  # (a, b) -> Fraction, meaning sum coeff (c1^2)^a c2^b
    samples: list = field(default_factory=list)
    held_out: list = field(default_factory=list)

    def evaluate(self, c1sq, c2) -> Fraction:
        return sum((v * Fraction(c1sq) ** a * Fraction(c2) ** b for (a, b), v in self.terms.items()), Fraction(0))


def chern_invariants(model: SurfaceModel):
    c1sq = integrate(model, cup(model, model.c1, model.c1))
    return c1sq, integrate(model, model.c2)


def sample_model(k: int, e: int) -> SurfaceModel:
    """Model with b2 = 2, c1 = k(e1 + f1), so c1^2 = 2k^2, and c2 = e pt."""
    return synthetic(2, [k, k], e)


def _sample_value(args):
    k, e, n, P, config = args
    model = sample_model(k, e)
    x, y = chern_invariants(model)
    return model.name, x, y, chern_number(model, n, P, config)


def universal_polynomial(n: int, P, config: EGLConfig | None = None, held_out=("k3", "p2", "p1xp1"),
                         workers: int = 1) -> UniversalPolynomial:
    """Fit the polynomial in (c1^2, c2) of degree <= n on a triangular sample grid."""
    P = _as_poly(P)
    ks = list(range(n + 1))
    es = [0, 4, 24, 12, 36, 6][: n + 1] if n < 6 else [2 * j for j in range(n + 1)]
    points = [(ks[i], es[j]) for i in range(n + 1) for j in range(n + 1 - i)]
    monos = [(a, b) for a in range(n + 1) for b in range(n + 1 - a)]
    jobs = [(k, e, n, P, config) for k, e in points]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(_sample_value, jobs))
    else:
        samples = [_sample_value(j) for j in jobs]
    rows = [[x ** a * y ** b for a, b in monos] for _, x, y, _ in samples]
    rhs = [val for *_, val in samples]
    coeffs = _solve_dense(rows, rhs)
    poly = UniversalPolynomial(n, {mono: c for mono, c in zip(monos, coeffs) if c}, samples)
    for name in held_out:
        model = builtin(name) if isinstance(name, str) else name
        x, y = chern_invariants(model)
        val = chern_number(model, n, P, config)
        pred = poly.evaluate(x, y)
        poly.held_out.append((model.name, x, y, val, pred))
        if val != pred:
            raise InterpolationInconsistent(f"held-out model {model.name}: engine {val}, fit {pred}")
    return poly


def _solve_dense(rows, rhs):
    n = len(rows)
    a = [[Fraction(x) for x in r] + [Fraction(b)] for r, b in zip(rows, rhs)]
    for col in range(n):
        piv = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [x / p for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[i][n] for i in range(n)]
