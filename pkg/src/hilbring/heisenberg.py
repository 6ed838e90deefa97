"""Block-matrix calculus of Nakajima operators.

Every operator is evaluated on one weight block of the Fock space at a
time.  Matrices are exact (QMat) in the canonical monomial basis of each
block, ordered as in FockSpace.basis.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Callable, Optional

from .errors import ArityMismatch, OddClassRejected
from .fock import (
    FockVector,
    fock_space,
    insert_factor,
    remove_terms,
    weight,
)
from .frobenius import SurfaceClass, SurfaceModel, TensorClass, coproduct, diagonal_class
from .qmat import QMat

EXCESS_CONVENTIONS = ("plus", "minus")


@dataclass(frozen=True)
class HeisenbergConfig:
    """excess: sign convention of the c1 correction in q'_n.

    "plus":  q'_n = n L_n + 1/2 n(|n|-1) q_n(c1 a), so the central term of
               [q'_n, q_-n] is +integral(e_n a b) with e_n = 1/2 n^2(|n|-1) c1.
    "minus": q'_n = n L_n - 1/2 n(|n|-1) q_n(c1 a), the opposite sign.
    """

    excess: str = "plus"
    max_weight: int = 4

    def __post_init__(self):
        if self.excess not in EXCESS_CONVENTIONS:
            raise ValueError(f"excess must be one of {EXCESS_CONVENTIONS}")


@dataclass
class OperatorBlock:
    source: tuple
    target: tuple
    matrix: QMat
    parity: int


@dataclass
class ExcessClass:
    n: int
    value: SurfaceClass


def excess_class(model: SurfaceModel, n: int) -> ExcessClass:
    c = Fraction(n * n * (abs(n) - 1), 2)
    return ExcessClass(n, model.c1.scale(c))


def _key(alpha: dict):
    return tuple(sorted((k, v) for k, v in alpha.items() if v))


def _as_dict(alpha) -> dict:
    if isinstance(alpha, SurfaceClass):
        return dict(alpha.coeffs)
    if isinstance(alpha, int):
        return {alpha: Fraction(1)}
    return {k: Fraction(v) for k, v in alpha.items() if v}


class Calculus:
    """Memoized block matrices for one model and one configuration."""

    def __init__(self, model: SurfaceModel, config: HeisenbergConfig | None = None):
        self.model = model
        self.config = config or HeisenbergConfig()
        self.fs = fock_space(model)
        self._cache = {}
        self._tau_by_first = {}
        self.excess_sign = 1 if self.config.excess == "plus" else -1

    # helpers
    def dim(self, w: int) -> int:
        return self.fs.dim(w) if w >= 0 else 0

    def zero(self, rows_w: int, cols_w: int) -> QMat:
        return QMat.zeros((self.dim(rows_w), self.dim(cols_w)))

    def class_parity(self, alpha: dict) -> int:
        ps = {self.model.parity[i] for i in alpha}
        return ps.pop() if len(ps) == 1 else 0

    def mul(self, a: dict, b: dict) -> dict:
        out = {}
        for i, x in a.items():
            for j, y in b.items():
                for k, c in self.model.mul_basis(i, j).items():
                    out[k] = out.get(k, 0) + x * y * c
        return {k: v for k, v in out.items() if v}

    # Nakajima operators
    def q_basis(self, m: int, idx: int, w: int) -> QMat:
        key = ("qb", m, idx, w)
        if key in self._cache:
            return self._cache[key]
        if m == 0 or w < 0 or w + m < 0:
            mat = self.zero(w + m, w)
        elif m > 0:
            src = self.fs.basis(w)
            tgt = self.fs.index(w + m)
            entries = []
            for j, mono in enumerate(src):
                s, new = insert_factor(self.model, m, idx, mono)
                if s:
                    entries.append((tgt[new], j, s))
            mat = QMat.from_entries((self.dim(w + m), self.dim(w)), entries)
        else:
            mat = self._annihilation({idx: Fraction(1)}, -m, w)
        self._cache[key] = mat
        return mat

    def _annihilation(self, alpha: dict, m: int, w: int) -> QMat:
        model = self.model
        row = [Fraction(0)] * model.dim
        for c, a in alpha.items():
            for j in range(model.dim):
                row[j] += a * model.gram[c][j]
        par = self.class_parity(alpha)
        src = self.fs.basis(w)
        tgt = self.fs.index(w - m)
        entries = []
        for j, mono in enumerate(src):
            for coeff, new in remove_terms(model, m, row, par, mono):
                entries.append((tgt[new], j, coeff))
        return QMat.from_entries((self.dim(w - m), self.dim(w)), entries)

    def q(self, m: int, alpha, w: int) -> QMat:
        """q_m(alpha) from block w to block w+m."""
        alpha = _as_dict(alpha)
        if len(alpha) == 1:
            (i, a), = alpha.items()
            return self.q_basis(m, i, w).scale(a)
        key = ("q", m, _key(alpha), w)
        if key in self._cache:
            return self._cache[key]
        if m == 0 or w < 0 or w + m < 0 or not alpha:
            mat = self.zero(w + m, w)
        elif m < 0:
            mat = self._annihilation(alpha, -m, w)
        else:
            mat = self.zero(w + m, w)
            for i, a in alpha.items():
                mat = mat + self.q_basis(m, i, w).scale(a)
        self._cache[key] = mat
        return mat

    # normal ordered products
    def normal_ordered2(self, l1: int, l2: int, tensor: dict, w: int) -> QMat:
        """:q_l1 q_l2:(tensor) on block w; creations (larger index) act last."""
        out = self.zero(w + l1 + l2, w)
        if l1 == 0 or l2 == 0 or not tensor:
            return out
        par = self.model.parity
        if l1 >= l2:
            groups = {}
            for (a, b), c in tensor.items():
                groups.setdefault(a, {})
                groups[a][b] = groups[a].get(b, 0) + c
            for a, cls in groups.items():
                right = self.q(l2, cls, w)
                if right.is_zero():
                    continue
                out = out + self.q_basis(l1, a, w + l2) @ right
        else:
            groups = {}
            for (a, b), c in tensor.items():
                s = -1 if par[a] and par[b] else 1
                groups.setdefault(b, {})
                groups[b][a] = groups[b].get(a, 0) + s * c
            for b, cls in groups.items():
                right = self.q(l1, cls, w)
                if right.is_zero():
                    continue
                out = out + self.q_basis(l2, b, w + l1) @ right
        return out

    def normal_ordered3(self, ls, tensor: dict, w: int) -> QMat:
        l1, l2, l3 = ls
        total = l1 + l2 + l3
        out = self.zero(w + total, w)
        if 0 in ls or not tensor:
            return out
        order = sorted(range(3), key=lambda p: -ls[p])
        par = self.model.parity
        groups = {}
        for key, c in tensor.items():
            labels = [key[p] for p in order]
            # Koszul sign of permuting the labels into normal order
            s = 1
            for x in range(3):
                for y in range(x + 1, 3):
                    if order[x] > order[y] and par[key[order[x]]] and par[key[order[y]]]:
                        s = -s
            g = groups.setdefault((labels[0], labels[1]), {})
            g[labels[2]] = g.get(labels[2], 0) + s * c
        la, lb, lc = (ls[p] for p in order)
        for (a, b), cls in groups.items():
            right = self.q(lc, cls, w)
            if right.is_zero():
                continue
            mid = self.q_basis(lb, b, w + lc) @ right
            if mid.is_zero():
                continue
            out = out + self.q_basis(la, a, w + lc + lb) @ mid
        return out

    # Virasoro and derivatives
    def tau(self, alpha: dict) -> dict:
        out = {}
        for i, a in alpha.items():
            for key, v in self.model.coproduct_basis(i).items():
                out[key] = out.get(key, 0) + a * v
        return {k: v for k, v in out.items() if v}

    def virasoro(self, n: int, alpha, w: int) -> QMat:
        alpha = _as_dict(alpha)
        key = ("L", n, _key(alpha), w)
        if key in self._cache:
            return self._cache[key]
        t = self.tau(alpha)
        out = self.zero(w + n, w)
        if w >= 0 and w + n >= 0:
            for nu in range(-w, n + w + 1):
                if nu == 0 or nu == n:
                    continue
                out = out + self.normal_ordered2(nu, n - nu, t, w)
            out = out.scale(Fraction(1, 2))
        self._cache[key] = out
        return out

    def q_prime(self, n: int, alpha, w: int) -> QMat:
        alpha = _as_dict(alpha)
        key = ("qp", n, _key(alpha), w)
        if key in self._cache:
            return self._cache[key]
        out = self.virasoro(n, alpha, w).scale(n)
        corr = Fraction(n * (abs(n) - 1), 2)
        if corr and self.model.c1.coeffs:
            c1a = self.mul(dict(self.model.c1.coeffs), alpha)
            if c1a:
                out = out + self.q(n, c1a, w).scale(self.excess_sign * corr)
        self._cache[key] = out
        return out

    def boundary(self, w: int, choice: str = "first") -> QMat:
        """Matrix of the boundary operator on block w, by the derivation recursion."""
        key = ("D", w, choice)
        if key in self._cache:
            return self._cache[key]
        if w <= 0:
            mat = self.zero(w, w)
            self._cache[key] = mat
            return mat
        model = self.model
        src = self.fs.basis(w)
        groups = {}
        for j, mono in enumerate(src):
            if choice == "first":
                pos = 0
            else:
                pos = len(mono) - 1
            m, c = mono[pos]
            rest = mono[:pos] + mono[pos + 1:]
            odd_before = sum(model.parity[f[1]] for f in mono[:pos]) % 2
            sign = -1 if (odd_before and model.parity[c]) else 1
            groups.setdefault((m, c), ([], [], []))
            cols, rests, signs = groups[(m, c)]
            cols.append(j)
            rests.append(self.fs.index(w - m)[rest])
            signs.append(sign)
        out = self.zero(w, w)
        for (m, c), (cols, rests, signs) in groups.items():
            op = self.q_prime(m, {c: Fraction(1)}, w - m)
            lower = self.boundary(w - m, choice)
            if not lower.is_zero():
                op = op + self.q_basis(m, c, w - m) @ lower
            part = op.cols(rests).scale_cols(signs).scatter_cols(self.dim(w), cols)
            out = out + part
        self._cache[key] = out
        return out

    def derivative(self, k: int, m: int, alpha, w: int) -> QMat:
        """ad(D)^k q_m(alpha) on block w."""
        alpha = _as_dict(alpha)
        key = ("dk", k, m, _key(alpha), w)
        if key in self._cache:
            return self._cache[key]
        if k == 0:
            mat = self.q(m, alpha, w)
        else:
            prev = self.derivative(k - 1, m, alpha, w)
            if prev.is_zero():
                mat = prev
            else:
                mat = self.boundary(w + m) @ prev - prev @ self.boundary(w)
        self._cache[key] = mat
        return mat

    def cubic(self, w: int) -> QMat:
        """Sum over l1+l2+l3=0 of :q_l1 q_l2 q_l3:(delta_X) on block w."""
        key = ("cubic", w)
        if key in self._cache:
            return self._cache[key]
        delta = diagonal_class(self.model).terms
        out = self.zero(w, w)
        rng = [l for l in range(-w, w + 1) if l]
        for l1 in rng:
            for l2 in rng:
                l3 = -l1 - l2
                if l3 == 0 or abs(l3) > w:
                    continue
                out = out + self.normal_ordered3((l1, l2, l3), delta, w)
        self._cache[key] = out
        return out

    def vertex(self, m: int, gamma, w: int) -> QMat:
        """S_m(gamma) from block w to block w+m."""
        gamma = _as_dict(gamma)
        if any(self.model.parity[i] for i in gamma):
            raise OddClassRejected("vertex operators need an even class")
        key = ("S", m, _key(gamma), w)
        if key in self._cache:
            return self._cache[key]
        if m == 0:
            mat = QMat.identity(self.dim(w))
        else:
            mat = self.zero(w + m, w)
            for n in range(1, m + 1):
                mat = mat + (self.q(n, gamma, w + m - n) @ self.vertex(m - n, gamma, w)).scale(Fraction((-1) ** (n - 1), m))
        self._cache[key] = mat
        return mat


_CALCULI: dict = {}


def calculus(model: SurfaceModel, config: HeisenbergConfig | None = None) -> Calculus:
    config = config or HeisenbergConfig()
    key = (id(model), config)
    calc = _CALCULI.get(key)
    if calc is None or calc.model is not model:
        calc = Calculus(model, config)
        _CALCULI[key] = calc
    return calc


# vector-level API

def apply_block_op(model: SurfaceModel, op: Callable[[int], QMat], shift: int, v: FockVector) -> FockVector:
    fs = fock_space(model)
    by_w = {}
    for mono, c in v.terms.items():
        by_w.setdefault(weight(mono), {})[fs.index(weight(mono))[mono]] = c
    out = FockVector()
    for w, vec in by_w.items():
        if w + shift < 0:
            continue
        res = op(w).apply(vec)
        out = out + fs.dict_to_vector(res, w + shift)
    return out


def normal_ordered_apply(model: SurfaceModel, weights, coeffs: TensorClass, v: FockVector, config=None) -> FockVector:
    weights = tuple(weights)
    if len(weights) != coeffs.arity or len(weights) not in (2, 3):
        raise ArityMismatch(f"{len(weights)} weights for a tensor of arity {coeffs.arity}")
    calc = calculus(model, config)
    if len(weights) == 2:
        fn = lambda w: calc.normal_ordered2(weights[0], weights[1], coeffs.terms, w)
    else:
        fn = lambda w: calc.normal_ordered3(weights, coeffs.terms, w)
    return apply_block_op(model, fn, sum(weights), v)


def virasoro(model: SurfaceModel, n: int, alpha: SurfaceClass, v: FockVector, config=None) -> FockVector:
    calc = calculus(model, config)
    return apply_block_op(model, lambda w: calc.virasoro(n, alpha, w), n, v)


def q_prime(model: SurfaceModel, n: int, alpha: SurfaceClass, v: FockVector, config=None) -> FockVector:
    if n == 0:
        raise ValueError("q_prime needs n != 0")
    calc = calculus(model, config)
    return apply_block_op(model, lambda w: calc.q_prime(n, alpha, w), n, v)


def boundary(model: SurfaceModel, v: FockVector, config=None) -> FockVector:
    calc = calculus(model, config)
    return apply_block_op(model, calc.boundary, 0, v)


def iterated_derivative(model: SurfaceModel, k: int, m: int, alpha: SurfaceClass, n: int, config=None) -> OperatorBlock:
    calc = calculus(model, config)
    mat = calc.derivative(k, m, alpha, n)
    par = calc.class_parity(_as_dict(alpha))
    return OperatorBlock((n, None), (n + m, None), mat, par)


def vertex(model: SurfaceModel, m: int, gamma: SurfaceClass) -> FockVector:
    """S_m(gamma)|0> via m S_m = sum_n (-1)^(n-1) q_n(gamma) S_(m-n)."""
    from .fock import create

    if any(model.parity[i] for i in gamma.coeffs):
        raise OddClassRejected("vertex operators need an even class")
    s = [FockVector.vacuum()]
    for k in range(1, m + 1):
        acc = FockVector()
        for n in range(1, k + 1):
            acc = acc + create(model, n, gamma, s[k - n]).scale(Fraction((-1) ** (n - 1), k))
        s.append(acc)
    return s[m]


def vertex_block(model: SurfaceModel, m: int, gamma: SurfaceClass, n: int, config=None) -> OperatorBlock:
    calc = calculus(model, config)
    return OperatorBlock((n, None), (n + m, None), calc.vertex(m, gamma, n), 0)


# relation harness

class Op:
    """Operator of fixed weight shift and parity, evaluated blockwise.

    fn(w) returns None when some block it touches is above the weight bound.
    """

    def __init__(self, shift: int, parity: int, fn: Callable[[int], Optional[QMat]], calc: Calculus):
        self.shift, self.parity, self.fn, self.calc = shift, parity, fn, calc

    def __call__(self, w):
        if w < 0 or w + self.shift < 0:
            return self.calc.zero(w + self.shift, w)
        return self.fn(w)

    def __matmul__(self, other: "Op") -> "Op":
        def fn(w):
            b = other(w)
            if b is None:
                return None
            a = self(w + other.shift)
            return None if a is None else a @ b

        return Op(self.shift + other.shift, (self.parity + other.parity) % 2, fn, self.calc)

    def __add__(self, other: "Op") -> "Op":
        def fn(w):
            a, b = self(w), other(w)
            return None if a is None or b is None else a + b

        return Op(self.shift, self.parity, fn, self.calc)

    def scale(self, c) -> "Op":
        def fn(w):
            a = self(w)
            return None if a is None else a.scale(c)

        return Op(self.shift, self.parity, fn, self.calc)

    def __sub__(self, other: "Op") -> "Op":
        return self + other.scale(-1)


def bracket(a: Op, b: Op) -> Op:
    s = -1 if a.parity and b.parity else 1
    return (a @ b) - (b @ a).scale(s)


@dataclass
class RelationReport:
    relation: str
    passed: bool
    checked: int
    residual: Optional[str] = None

    def line(self):
        status = "pass" if self.passed else "fail"
        extra = f" residual: {self.residual}" if self.residual else ""
        return f"{self.relation}: {status} ({self.checked} block identities){extra}"


class Harness:
    def __init__(self, calc: Calculus, max_weight: int):
        self.calc = calc
        self.N = max_weight

    def _bounded(self, shift, parity, mat_fn, reach=0):
        N = self.N

        def fn(w):
            if w > N or w + shift > N or w + reach > N:
                return None
            return mat_fn(w)

        return Op(shift, parity, fn, self.calc)

    def Q(self, m, alpha):
        alpha = _as_dict(alpha)
        return self._bounded(m, self.calc.class_parity(alpha), lambda w: self.calc.q(m, alpha, w))

    def Qp(self, n, alpha):
        alpha = _as_dict(alpha)
        return self._bounded(n, self.calc.class_parity(alpha), lambda w: self.calc.q_prime(n, alpha, w))

    def L(self, n, alpha):
        alpha = _as_dict(alpha)
        return self._bounded(n, self.calc.class_parity(alpha), lambda w: self.calc.virasoro(n, alpha, w))

    def D(self):
        return self._bounded(0, 0, self.calc.boundary)

    def scalar(self, c):
        return self._bounded(0, 0, lambda w: QMat.identity(self.calc.dim(w)).scale(c))

    def compare(self, lhs: Op, rhs: Op, label, weights=None):
        """Returns (count, residual description or None)."""
        count = 0
        for w in weights if weights is not None else range(self.N + 1):
            a, b = lhs(w), rhs(w)
            if a is None or b is None:
                continue
            count += 1
            diff = a - b
            if not diff.is_zero():
                r, c, v = next(diff.entries())
                fs = self.calc.fs
                src = fs.basis(w)[c]
                return count, f"{label} on block {w}: entry ({r},{c}) of source {src} is off by {v}"
        return count, None


def check_relation(relation_id: str, model: SurfaceModel, max_weight: int = 4, config=None,
                   index_bound: Optional[int] = None, classes=None) -> RelationReport:
    """Verify a named identity on all blocks whose weights stay within max_weight."""
    calc = calculus(model, config)
    h = Harness(calc, max_weight)
    idx_bound = index_bound if index_bound is not None else max_weight
    basis = list(classes) if classes is not None else list(range(model.dim))
    mm = [i for i in range(-idx_bound, idx_bound + 1) if i]
    total = 0

    def done(res):
        return RelationReport(relation_id, res is None, total, res)

    if relation_id == "heisenberg":
        for a in basis:
            for b in basis:
                g = model.gram[a][b]
                for i in mm:
                    for j in mm:
                        lhs = bracket(h.Q(i, a), h.Q(j, b))
                        c = i * g if i + j == 0 else 0
                        rhs = h.scalar(c) if i + j == 0 else h._bounded(i + j, 0, lambda w, i=i, j=j: calc.zero(w + i + j, w))
                        cnt, res = h.compare(lhs, rhs, f"[q{i}({model.names[a]}), q{j}({model.names[b]})]")
                        total += cnt
                        if res:
                            return done(res)
        return done(None)

    if relation_id == "derivative":
        c1 = dict(model.c1.coeffs)
        for a in basis:
            for b in basis:
                ab = calc.mul({a: 1}, {b: 1})
                for n in mm:
                    for m in mm:
                        lhs = bracket(h.Qp(n, a), h.Q(m, b))
                        rhs = h.Q(n + m, ab).scale(-n * m) if n + m else None
                        if n + m == 0:
                            e = Fraction(n * n * (abs(n) - 1), 2)
                            val = e * sum((v * model.integral.get(k, 0) for k, v in calc.mul(c1, ab).items()), Fraction(0))
                            rhs = h.scalar(val)
                        cnt, res = h.compare(lhs, rhs, f"[q'{n}({model.names[a]}), q{m}({model.names[b]})]")
                        total += cnt
                        if res:
                            return done(res)
        return done(None)

    if relation_id == "virasoro-q":
        for a in basis:
            for b in basis:
                ab = calc.mul({a: 1}, {b: 1})
                for n in range(-idx_bound, idx_bound + 1):
                    for m in mm:
                        lhs = bracket(h.L(n, a), h.Q(m, b))
                        rhs = h.Q(n + m, ab).scale(-m)
                        cnt, res = h.compare(lhs, rhs, f"[L{n}({model.names[a]}), q{m}({model.names[b]})]")
                        total += cnt
                        if res:
                            return done(res)
        return done(None)

    if relation_id == "cubic-boundary":
        lhs = h._bounded(0, 0, lambda w: calc.cubic(w).scale(Fraction(-1, 6)))
        cnt, res = h.compare(lhs, h.D(), "-1/6 :qqq:(delta) - D")
        total += cnt
        return done(res)

    if relation_id == "super-jacobi":
        gens = []
        for a in basis:
            for m in (1, -1, 2, -2):
                if abs(m) <= idx_bound:
                    gens.append((f"q{m}({model.names[a]})", h.Q(m, a)))
        gens.append(("D", h.D()))
        for a in basis:
            gens.append((f"q'1({model.names[a]})", h.Qp(1, a)))
        # all triples would be cubic in the basis size; a deterministic sample keeps it tractable
        triples = list(itertools.product(range(len(gens)), repeat=3))
        step = max(1, len(triples) // 400)
        for x, y, z in triples[::step]:
            (na, A), (nb, B), (nc, C) = gens[x], gens[y], gens[z]
            s = -1 if A.parity and B.parity else 1
            lhs = bracket(A, bracket(B, C))
            rhs = bracket(bracket(A, B), C) + bracket(B, bracket(A, C)).scale(s)
            cnt, res = h.compare(lhs, rhs, f"Jacobi({na},{nb},{nc})")
            total += cnt
            if res:
                return done(res)
        return done(None)

    raise ValueError(f"unknown relation id {relation_id!r}")


RELATION_IDS = ("heisenberg", "derivative", "virasoro-q", "cubic-boundary", "super-jacobi")
