"""Graded Frobenius algebra models of H*(X, Q) for a closed four-manifold X.

A model is a finite basis with degrees in 0..4, structure constants, an
integral supported in degree 4, and the Chern classes c1, c2.  Odd classes
obey the Koszul sign rule everywhere.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import (
    ArityMismatch,
    DegeneratePairing,
    GradingViolation,
    NonAssociative,
    SchemaError,
    UnknownName,
)


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


class SurfaceClass:
    """Sparse rational combination of basis elements of one model."""

    __slots__ = ("coeffs", "homogeneous_degree")

    def __init__(self, coeffs: Mapping[int, Fraction] | None = None, homogeneous_degree: int | None = None):
        self.coeffs = {int(k): _frac(v) for k, v in (coeffs or {}).items() if v != 0}
        self.homogeneous_degree = homogeneous_degree

    def __add__(self, other: "SurfaceClass") -> "SurfaceClass":
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        deg = self.homogeneous_degree if self.homogeneous_degree == other.homogeneous_degree else None
        return SurfaceClass(out, deg)

    def __sub__(self, other: "SurfaceClass") -> "SurfaceClass":
        return self + other.scale(-1)

    def scale(self, c) -> "SurfaceClass":
        c = _frac(c)
        return SurfaceClass({k: c * v for k, v in self.coeffs.items()}, self.homogeneous_degree)

    def __rmul__(self, c) -> "SurfaceClass":
        return self.scale(c)

    def __neg__(self) -> "SurfaceClass":
        return self.scale(-1)

    def __eq__(self, other) -> bool:
        return isinstance(other, SurfaceClass) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(tuple(sorted(self.coeffs.items())))

    def is_zero(self) -> bool:
        return not self.coeffs

    def __repr__(self) -> str:
        if not self.coeffs:
            return "SurfaceClass(0)"
        return "SurfaceClass(" + " + ".join(f"{v}*e{k}" for k, v in sorted(self.coeffs.items())) + ")"


@dataclass
class TensorClass:
    """Element of H*(X)^{(x) arity}; terms map index tuples to rationals.

    Factors are always kept in ascending position order, so no reordering
    sign is ever pending; `koszul_normalized` records that convention.
    """

    arity: int
    terms: dict = field(default_factory=dict)
    koszul_normalized: bool = True

    def __post_init__(self):
        if self.arity not in (1, 2, 3, 4):
            raise ArityMismatch(f"arity {self.arity} not supported")
        for key in self.terms:
            if len(key) != self.arity:
                raise ArityMismatch(f"term {key} has wrong arity for {self.arity}")
        self.terms = {k: _frac(v) for k, v in self.terms.items() if v != 0}

    def __add__(self, other: "TensorClass") -> "TensorClass":
        if other.arity != self.arity:
            raise ArityMismatch(f"cannot add arity {self.arity} and {other.arity}")
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return TensorClass(self.arity, out)

    def scale(self, c) -> "TensorClass":
        c = _frac(c)
        return TensorClass(self.arity, {k: c * v for k, v in self.terms.items()})

    def __eq__(self, other) -> bool:
        return isinstance(other, TensorClass) and self.arity == other.arity and self.terms == other.terms


class SurfaceModel:
    """Immutable validated model.  Construct via `load_surface` or `builtin`."""

    def __init__(self, name, basis, unit_index, product, integral, c1, c2, validate=True):
        self.name = name
        self.basis = [(str(n), int(d)) for n, d in basis]
        self.dim = len(self.basis)
        self.degrees = [d for _, d in self.basis]
        self.parity = [d % 2 for d in self.degrees]
        self.names = [n for n, _ in self.basis]
        self.index = {n: i for i, n in enumerate(self.names)}
        self.unit_index = unit_index
        # product[(i, j)] -> {k: Fraction}
        self.product = {key: {k: _frac(v) for k, v in val.items() if v != 0} for key, val in product.items()}
        self.integral = {k: _frac(v) for k, v in integral.items() if v != 0}
        self.c1 = c1
        self.c2 = c2
        if validate:
            self._validate()
        self.gram = [[self._pair(i, j) for j in range(self.dim)] for i in range(self.dim)]
        self.gram_inv = _invert(self.gram)
        if self.gram_inv is None:
            raise DegeneratePairing(f"Poincare pairing of model {name!r} is singular")
        # dual[i] = e^i with integral(e^i e_k) = delta_ik
        self.dual = [
            {j: self.gram_inv[i][j] for j in range(self.dim) if self.gram_inv[i][j] != 0}
            for i in range(self.dim)
        ]
        self._coproduct_cache = {}

    # basic structure
    def mul_basis(self, i: int, j: int) -> dict:
        return self.product.get((i, j), {})

    def _pair(self, i, j):
        return sum((c * self.integral.get(k, 0) for k, c in self.mul_basis(i, j).items()), Fraction(0))

    def cls(self, name_or_index, coeff=1) -> SurfaceClass:
        if isinstance(name_or_index, str):
            if name_or_index not in self.index:
                raise UnknownName(f"no basis element named {name_or_index!r} in model {self.name!r}")
            i = self.index[name_or_index]
        else:
            i = int(name_or_index)
            if not 0 <= i < self.dim:
                raise UnknownName(f"basis index {i} out of range")
        return SurfaceClass({i: _frac(coeff)}, self.degrees[i])

    def unit(self) -> SurfaceClass:
        return self.cls(self.unit_index)

    def point(self) -> SurfaceClass:
        """The degree-4 class integrating to 1."""
        top = [i for i in range(self.dim) if self.degrees[i] == 4]
        i = top[0]
        return SurfaceClass({i: 1 / self.integral[i]}, 4)

    def class_degree(self, a: SurfaceClass):
        degs = {self.degrees[i] for i in a.coeffs}
        if len(degs) == 1:
            return degs.pop()
        if not degs:
            return None
        return None

    def check_class(self, a: SurfaceClass):
        for i in a.coeffs:
            if not 0 <= i < self.dim:
                raise UnknownName(f"class references basis index {i} outside model {self.name!r}")
        if a.homogeneous_degree is not None:
            for i in a.coeffs:
                if self.degrees[i] != a.homogeneous_degree:
                    raise GradingViolation(f"class marked degree {a.homogeneous_degree} contains e{i}")

    def betti(self):
        out = [0] * 5
        for d in self.degrees:
            out[d] += 1
        return tuple(out)

    def euler_class_integral(self) -> Fraction:
        return Fraction(sum((-1) ** d for d in self.degrees))

    def _validate(self):
        dim = self.dim
        for n, d in self.basis:
            if d not in (0, 1, 2, 3, 4):
                raise GradingViolation(f"basis element {n!r} has degree {d} outside 0..4")
        units = [i for i in range(dim) if self.degrees[i] == 0]
        if len(units) != 1 or units[0] != self.unit_index:
            raise GradingViolation(f"need exactly one degree-0 basis element as unit, found {units}")
        for (i, j), val in self.product.items():
            if not (0 <= i < dim and 0 <= j < dim):
                raise SchemaError(f"product entry ({i},{j}) out of range")
            for k in val:
                if not 0 <= k < dim:
                    raise SchemaError(f"product entry ({i},{j}) -> {k} out of range")
                if self.degrees[k] != self.degrees[i] + self.degrees[j]:
                    raise GradingViolation(f"product of basis triple ({i},{j},{k}) violates degrees")
        for k in self.integral:
            if self.degrees[k] != 4:
                raise GradingViolation(f"integral nonzero on basis element {k} of degree {self.degrees[k]}")
        u = self.unit_index
        for i in range(dim):
            if self.mul_basis(u, i) != {i: 1} or self.mul_basis(i, u) != {i: 1}:
                raise GradingViolation(f"product is not unital at basis element {i}")
        for i in range(dim):
            for j in range(dim):
                s = -1 if self.parity[i] and self.parity[j] else 1
                a = self.mul_basis(i, j)
                b = {k: s * v for k, v in self.mul_basis(j, i).items()}
                if a != b:
                    raise GradingViolation(f"product not graded-commutative on basis pair ({i},{j})")
        for i, j, k in itertools.product(range(dim), repeat=3):
            if self.degrees[i] + self.degrees[j] + self.degrees[k] > 4:
                continue
            left = _mul_dicts(self, _mul_dicts(self, {i: 1}, {j: 1}), {k: 1})
            right = _mul_dicts(self, {i: 1}, _mul_dicts(self, {j: 1}, {k: 1}))
            if left != right:
                raise NonAssociative(f"product not associative on basis triple ({i},{j},{k})")
        for name, c, deg in (("c1", self.c1, 2), ("c2", self.c2, 4)):
            self.check_class(c)
            for i in c.coeffs:
                if self.degrees[i] != deg:
                    raise GradingViolation(f"{name} has a component in degree {self.degrees[i]}")

    # coproducts
    def coproduct_basis(self, i: int) -> dict:
        """tau_2*(e_i) as {(k, j): coeff}."""
        if i in self._coproduct_cache:
            return self._coproduct_cache[i]
        out = {}
        for a in range(self.dim):
            for k, p in self.mul_basis(i, a).items():
                for j, g in self.dual[a].items():
                    out[(k, j)] = out.get((k, j), 0) + p * g
        out = {key: v for key, v in out.items() if v != 0}
        self._coproduct_cache[i] = out
        return out

    def __repr__(self):
        return f"SurfaceModel({self.name!r}, b={self.betti()})"


def _mul_dicts(model: SurfaceModel, a: Mapping[int, Fraction], b: Mapping[int, Fraction]) -> dict:
    out = {}
    for i, x in a.items():
        for j, y in b.items():
            for k, c in model.mul_basis(i, j).items():
                out[k] = out.get(k, 0) + x * y * c
    return {k: v for k, v in out.items() if v != 0}


def _invert(mat):
    n = len(mat)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(mat)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        row = [x / p for x in a[col]]
        a[col] = row
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], row)]
    return [row[n:] for row in a]


def cup(model: SurfaceModel, a: SurfaceClass, b: SurfaceClass) -> SurfaceClass:
    model.check_class(a)
    model.check_class(b)
    deg = None
    if a.homogeneous_degree is not None and b.homogeneous_degree is not None:
        deg = a.homogeneous_degree + b.homogeneous_degree
    return SurfaceClass(_mul_dicts(model, a.coeffs, b.coeffs), deg)


def integrate(model: SurfaceModel, a: SurfaceClass) -> Fraction:
    model.check_class(a)
    return sum((v * model.integral.get(k, 0) for k, v in a.coeffs.items()), Fraction(0))


def pairing(model: SurfaceModel, a: SurfaceClass, b: SurfaceClass) -> Fraction:
    return integrate(model, cup(model, a, b))


def coproduct(model: SurfaceModel, arity: int, a: SurfaceClass) -> TensorClass:
    """tau_2*(a) = sum_i (a e_i) (x) e^i, and (tau_2* (x) id) tau_2*(a) for arity 3."""
    if arity not in (2, 3):
        raise ArityMismatch(f"coproduct arity must be 2 or 3, got {arity}")
    model.check_class(a)
    two = {}
    for i, x in a.coeffs.items():
        for key, v in model.coproduct_basis(i).items():
            two[key] = two.get(key, 0) + x * v
    if arity == 2:
        return TensorClass(2, two)
    three = {}
    for (k, j), v in two.items():
        for (p, q), w in model.coproduct_basis(k).items():
            three[(p, q, j)] = three.get((p, q, j), 0) + v * w
    return TensorClass(3, three)


def diagonal_class(model: SurfaceModel) -> TensorClass:
    """delta_X = (tau_2* (x) id) tau_2*(1), the small diagonal in X^3."""
    return coproduct(model, 3, model.unit())


def tensor_sign(model: SurfaceModel, left: tuple, right: tuple) -> int:
    """Koszul sign of (x1(x)..(x)xr)(y1(x)..(x)yr) = s (x1y1)(x)..(x)(xr yr)."""
    odd = 0
    for i in range(len(left)):
        if model.parity[left[i]]:
            for j in range(i):
                odd ^= model.parity[right[j]]
    return -1 if odd else 1


def tensor_multiply(model: SurfaceModel, a: TensorClass, b: TensorClass) -> TensorClass:
    if a.arity != b.arity:
        raise ArityMismatch(f"cannot multiply arity {a.arity} by arity {b.arity}")
    out = {}
    for ka, va in a.terms.items():
        for kb, vb in b.terms.items():
            s = tensor_sign(model, ka, kb)
            prods = [model.mul_basis(x, y) for x, y in zip(ka, kb)]
            if any(not p for p in prods):
                continue
            for combo in itertools.product(*(p.items() for p in prods)):
                key = tuple(k for k, _ in combo)
                c = s * va * vb
                for _, w in combo:
                    c *= w
                out[key] = out.get(key, 0) + c
    return TensorClass(a.arity, {k: v for k, v in out.items() if v != 0})


def tensor_integrate(model: SurfaceModel, t: TensorClass, slots: Iterable[int] | None = None) -> Fraction:
    """Integrate over every factor (only top-degree terms survive, so no signs)."""
    total = Fraction(0)
    for key, v in t.terms.items():
        c = v
        for k in key:
            c *= model.integral.get(k, 0)
            if c == 0:
                break
        total += c
    return total


def multiply_out(model: SurfaceModel, t: TensorClass) -> SurfaceClass:
    """m: H^{(x)r} -> H, multiplying the factors in order."""
    out = {}
    for key, v in t.terms.items():
        acc = {key[0]: v}
        for k in key[1:]:
            acc = _mul_dicts(model, acc, {k: 1})
        for k, c in acc.items():
            out[k] = out.get(k, 0) + c
    return SurfaceClass({k: c for k, c in out.items() if c != 0})


# builtin models

def _model_from_pairs(name, basis, products, integral, c1, c2):
    """products: {(i, j): {k: c}} given for i <= j; filled out by unit and graded commutativity."""
    idx = {n: i for i, (n, _) in enumerate(basis)}
    unit = idx[basis[0][0]]
    parity = [d % 2 for _, d in basis]
    prod = {}
    for (i, j), val in products.items():
        prod[(i, j)] = dict(val)
        s = -1 if parity[i] and parity[j] else 1
        prod[(j, i)] = {k: s * v for k, v in val.items()}
    for i in range(len(basis)):
        prod[(unit, i)] = {i: Fraction(1)}
        prod[(i, unit)] = {i: Fraction(1)}
    return SurfaceModel(name, basis, unit, prod, integral, c1, c2)


def _even_model(name, h2_names, h2_gram, c1_vec, e):
    """Basis 1, H^2 with given Gram matrix (values of integral(ab)), pt."""
    b2 = len(h2_names)
    basis = [("1", 0)] + [(n, 2) for n in h2_names] + [("pt", 4)]
    pt = b2 + 1
    products = {}
    for i in range(b2):
        for j in range(i, b2):
            g = Fraction(h2_gram[i][j])
            if g:
                products[(i + 1, j + 1)] = {pt: g}
    c1 = SurfaceClass({i + 1: Fraction(c) for i, c in enumerate(c1_vec) if c}, 2)
    c2 = SurfaceClass({pt: Fraction(e)} if e else {}, 4)
    return _model_from_pairs(name, basis, products, {pt: Fraction(1)}, c1, c2)


E8_EDGES = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (4, 7)]


def _k3():
    names = []
    size = 22
    gram = [[0] * size for _ in range(size)]
    for u in range(3):
        names += [f"e{u + 1}", f"f{u + 1}"]
        gram[2 * u][2 * u + 1] = gram[2 * u + 1][2 * u] = 1
    for copy, letter in ((0, "a"), (1, "b")):
        off = 6 + 8 * copy
        names += [f"{letter}{i + 1}" for i in range(8)]
        for i in range(8):
            gram[off + i][off + i] = -2
        for i, j in E8_EDGES:
            gram[off + i][off + j] = gram[off + j][off + i] = 1
    return _even_model("k3", names, gram, [0] * size, 24)


def _p2():
    return _even_model("p2", ["h"], [[1]], [3], 3)


def _p1xp1():
    return _even_model("p1xp1", ["a", "b"], [[0, 1], [1, 0]], [2, 2], 4)


def _t4():
    gens = [1, 2, 3, 4]
    subsets = []
    for r in range(5):
        subsets += list(itertools.combinations(gens, r))
    names = []
    for s in subsets:
        if len(s) == 0:
            names.append("1")
        elif len(s) == 4:
            names.append("pt")
        else:
            names.append("x" + "".join(map(str, s)))
    basis = [(n, len(s)) for n, s in zip(names, subsets)]
    pos = {s: i for i, s in enumerate(subsets)}
    products = {}
    for i, s in enumerate(subsets):
        for j, t in enumerate(subsets):
            if i > j or set(s) & set(t):
                continue
            merged = list(s) + list(t)
            inv = sum(1 for a in range(len(merged)) for b in range(a + 1, len(merged)) if merged[a] > merged[b])
            products[(i, j)] = {pos[tuple(sorted(merged))]: Fraction((-1) ** inv)}
    top = pos[(1, 2, 3, 4)]
    return _model_from_pairs("t4", basis, products, {top: Fraction(1)}, SurfaceClass({}, 2), SurfaceClass({}, 4))


def synthetic(b2: int, c1_vector=None, e=0) -> SurfaceModel:
    """Even model with b2/2 hyperbolic planes, given c1 coordinates and c2 = e pt."""
    if b2 < 0 or b2 % 2:
        raise UnknownName(f"synthetic model needs an even b2 >= 0, got {b2}")
    names, size = [], b2
    gram = [[0] * size for _ in range(size)]
    for u in range(b2 // 2):
        names += [f"e{u + 1}", f"f{u + 1}"]
        gram[2 * u][2 * u + 1] = gram[2 * u + 1][2 * u] = 1
    if c1_vector is None or c1_vector == 0:
        c1_vector = [0] * b2
    c1_vector = [Fraction(c) for c in c1_vector]
    if len(c1_vector) != b2:
        raise UnknownName(f"synthetic c1 vector has length {len(c1_vector)}, expected {b2}")
    label = ",".join(str(c) for c in c1_vector)
    return _even_model(f"synthetic({b2},[{label}],{Fraction(e)})", names, gram, c1_vector, Fraction(e))


_BUILTINS = {"k3": _k3, "p2": _p2, "p1xp1": _p1xp1, "t4": _t4}
_CACHE: dict = {}

_SYN = re.compile(r"^synthetic\(\s*(\d+)\s*,\s*(\[[^\]]*\]|[-+0-9/]+)\s*,\s*([-+0-9/]+)\s*\)$")


def builtin(name: str) -> SurfaceModel:
    """k3, t4, p2, p1xp1 or synthetic(b2, c1, e) with c1 either 0 or [c_1,...,c_b2]."""
    key = name.replace(" ", "")
    if key in _CACHE:
        return _CACHE[key]
    if key in _BUILTINS:
        model = _BUILTINS[key]()
    else:
        m = _SYN.match(key)
        if not m:
            raise UnknownName(f"unknown surface {name!r}")
        b2 = int(m.group(1))
        raw = m.group(2)
        if raw.startswith("["):
            inner = raw[1:-1].strip()
            vec = [Fraction(x) for x in inner.split(",")] if inner else []
        else:
            if Fraction(raw) != 0:
                raise UnknownName(f"synthetic c1 must be 0 or a vector, got {raw!r}")
            vec = None
        model = synthetic(b2, vec, Fraction(m.group(3)))
    _CACHE[key] = model
    return model


def load_surface(spec: Mapping) -> SurfaceModel:
    """Build a model from a surface description record (parsed JSON)."""
    try:
        name = spec.get("name", "custom")
        basis = [(b["name"], int(b["degree"])) for b in spec["basis"]]
        unit = spec.get("unit", 0)
        if isinstance(unit, str):
            unit = [n for n, _ in basis].index(unit)
        prod = {}
        for entry in spec["products"]:
            i, j, terms = entry
            prod[(int(i), int(j))] = {int(t["k"]): _rat(t) for t in terms}
        integral = {int(t["k"]): _rat(t) for t in spec["integral"]}
        c1 = SurfaceClass({int(t["k"]): _rat(t) for t in spec.get("c1", [])}, 2)
        c2 = SurfaceClass({int(t["k"]): _rat(t) for t in spec.get("c2", [])}, 4)
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"malformed surface description: {exc}") from exc
    n = len(basis)
    parity = [d % 2 for _, d in basis]
    for i in range(n):
        prod.setdefault((unit, i), {i: Fraction(1)})
        prod.setdefault((i, unit), {i: Fraction(1)})
    for (i, j), val in list(prod.items()):
        if (j, i) not in prod:
            s = -1 if parity[i] and parity[j] else 1
            prod[(j, i)] = {k: s * v for k, v in val.items()}
    return SurfaceModel(name, basis, unit, prod, integral, c1, c2)


def _rat(t) -> Fraction:
    return Fraction(int(t["num"]), int(t.get("den", 1)))


def dump_surface(model: SurfaceModel) -> dict:
    def entries(d):
        return [{"k": k, "num": v.numerator, "den": v.denominator} for k, v in sorted(d.items())]

    return {
        "name": model.name,
        "basis": [{"name": n, "degree": d} for n, d in model.basis],
        "unit": model.unit_index,
        "products": [[i, j, entries(v)] for (i, j), v in sorted(model.product.items()) if v],
        "integral": entries(model.integral),
        "c1": entries(model.c1.coeffs),
        "c2": entries(model.c2.coeffs),
    }


def relabel(model: SurfaceModel, perm, name: str | None = None) -> SurfaceModel:
    """The same algebra with basis element i moved to position perm[i]."""
    if sorted(perm) != list(range(model.dim)):
        raise SchemaError(f"not a permutation of {model.dim} basis elements")
    basis = [None] * model.dim
    for i, p in enumerate(perm):
        basis[p] = model.basis[i]

    def move(d):
        return {perm[k]: v for k, v in d.items()}

    product = {(perm[i], perm[j]): move(v) for (i, j), v in model.product.items()}
    return SurfaceModel(name or model.name, basis, perm[model.unit_index], product, move(model.integral),
                        SurfaceClass(move(model.c1.coeffs), 2), SurfaceClass(move(model.c2.coeffs), 4))


def preserves_structure(model: SurfaceModel, perm) -> bool:
    """True if sending e_i to e_perm[i] is an automorphism preserving the product, integral and c1, c2."""
    if sorted(perm) != list(range(model.dim)) or any(model.degrees[i] != model.degrees[p] for i, p in enumerate(perm)):
        return False
    for (i, j), v in model.product.items():
        if model.product.get((perm[i], perm[j]), {}) != {perm[k]: c for k, c in v.items()}:
            return False
    move = lambda d: {perm[k]: c for k, c in d.items()}
    return (move(model.integral) == model.integral and move(model.c1.coeffs) == model.c1.coeffs
            and move(model.c2.coeffs) == model.c2.coeffs)
