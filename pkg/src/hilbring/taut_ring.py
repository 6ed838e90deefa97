"""Tautological multiplication operators S_k(alpha) and ring tables of X^[n].

S_k(alpha) is characterized by S|0> = 0, [S, D] = 0 and
[S_k(alpha), q_1(b)] = (1/k!) q_1^(k)(alpha b).  Two constructions are
provided: a block recursion over the Nakajima basis (default) and the word
basis solver (letters D and q_1(b)), used as an independent cross-check.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Optional

import numpy as np

from .errors import GenerationFailure, SpanFailure
from .fock import FockVector, fock_space, unit_vector
from .frobenius import SurfaceModel
from .heisenberg import Calculus, HeisenbergConfig, _as_dict, _key, calculus
from .qmat import QMat, rref, solve_square

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TautConfig:
    method: str = "recursive"  # or "words"
    fallback_generators: bool = True
    heisenberg: HeisenbergConfig = field(default_factory=HeisenbergConfig)


@dataclass
class GeneratorWord:
    letters: tuple  # ("D",) or ("Q", idx), leftmost applied last

    def weight(self):
        return sum(1 for x in self.letters if x[0] == "Q")

    def degree(self, model):
        return sum(2 if x[0] == "D" else model.degrees[x[1]] for x in self.letters)


class TautCalculus:
    def __init__(self, model: SurfaceModel, config: TautConfig | None = None):
        self.config = config or TautConfig()
        self.model = model
        self.calc: Calculus = calculus(model, self.config.heisenberg)
        self.fs = self.calc.fs
        self._cache = {}

    def _q1k(self, k, gamma: dict, w):
        return self.calc.derivative(k, 1, gamma, w)

    def _sign(self, alpha, beta_idx):
        pa = self.calc.class_parity(alpha)
        return -1 if pa and self.model.parity[beta_idx] else 1

    def _commutator_C(self, k, alpha: dict, m: int, beta: dict, w: int) -> QMat:
        """[S_k(alpha), q_m(beta)] from block w to w+m."""
        key = ("C", k, _key(alpha), m, _key(beta), w)
        if key in self._cache:
            return self._cache[key]
        calc = self.calc
        inv = Fraction(1, factorial(k))
        ab = calc.mul(alpha, beta)
        if m == 1:
            mat = self._q1k(k, ab, w).scale(inv) if ab else calc.zero(w + 1, w)
        else:
            mm = m - 1
            one = {self.model.unit_index: Fraction(1)}
            # [q1^(k+1)(ab), q_mm(1)]
            if ab:
                a1 = self._q1k(k + 1, ab, w + mm) @ calc.q(mm, one, w)
                a2 = calc.q(mm, one, w + 1) @ self._q1k(k + 1, ab, w)
                first = (a1 - a2).scale(inv)
            else:
                first = calc.zero(w + m, w)
            # [q'_1(beta), C_mm(1)] super-bracket, parities |beta| and |alpha|
            cm = self._commutator_C(k, alpha, mm, one, w)
            pb = calc.class_parity(beta)
            pa = calc.class_parity(alpha)
            s = -1 if pa and pb else 1
            b1 = calc.q_prime(1, beta, w + mm) @ cm
            b2 = self._commutator_C(k, alpha, mm, one, w + 1) @ calc.q_prime(1, beta, w)
            second = (b1 - b2.scale(s)).scale(s)
            mat = (first + second).scale(Fraction(-1, mm))
        self._cache[key] = mat
        return mat

    def mult(self, k: int, alpha, w: int) -> QMat:
        """Matrix of S_k(alpha) on block w."""
        alpha = _as_dict(alpha)
        if self.config.method == "words":
            return self.mult_words(k, alpha, w)
        return self.mult_recursive(k, alpha, w)

    def mult_recursive(self, k: int, alpha: dict, w: int) -> QMat:
        key = ("S", k, _key(alpha), w)
        if key in self._cache:
            return self._cache[key]
        calc, model = self.calc, self.model
        degs = {model.degrees[i] for i in alpha}
        if w <= 0 or not alpha or all(d + 2 * k > 4 * w for d in degs):
            mat = calc.zero(w, w)
            self._cache[key] = mat
            return mat
        src = self.fs.basis(w)
        groups = {}
        for j, mono in enumerate(src):
            ones = [p for p, f in enumerate(mono) if f[0] == 1]
            pos = ones[0] if ones else 0
            m, c = mono[pos]
            rest = mono[:pos] + mono[pos + 1:]
            odd_before = sum(model.parity[f[1]] for f in mono[:pos]) % 2
            sign = -1 if (odd_before and model.parity[c]) else 1
            g = groups.setdefault((m, c), ([], [], []))
            g[0].append(j)
            g[1].append(self.fs.index(w - m)[rest])
            g[2].append(sign)
        inv = Fraction(1, factorial(k))
        out = calc.zero(w, w)
        for (m, c), (cols, rests, signs) in groups.items():
            beta = {c: Fraction(1)}
            op = self._commutator_C(k, alpha, m, beta, w - m)
            lower = self.mult_recursive(k, alpha, w - m)
            if not lower.is_zero():
                op = op + (calc.q_basis(m, c, w - m) @ lower).scale(self._sign(alpha, c))
            if op.is_zero():
                continue
            out = out + op.cols(rests).scale_cols(signs).scatter_cols(self.dim(w), cols)
        self._cache[key] = out
        return out

    def dim(self, w):
        return self.calc.dim(w)

    # word basis route
    def word_vector(self, letters, n) -> dict:
        """Vector (block n index -> coeff) of a word applied to the vacuum."""
        vec, w = {0: Fraction(1)}, 0
        for letter in reversed(letters):
            if letter[0] == "D":
                vec = self.calc.boundary(w).apply(vec)
            else:
                vec = self.calc.q_basis(1, letter[1], w).apply(vec)
                w += 1
            if not vec:
                return {}
        return vec

    def word_basis(self, n: int):
        """Words (fewest D letters first) whose vectors span the weight-n block."""
        key = ("WB", n)
        if key in self._cache:
            return self._cache[key]
        model = self.model
        slices = self.fs.slices(n)
        words, vecs = [], []
        echelon = {d: {} for d in slices}  # pivot -> row, per degree slice
        need = {d: hi - lo for d, (lo, hi) in slices.items()}
        q_letters = [("Q", i) for i in range(model.dim)]
        max_d = 2 * n
        for dcount in range(0, max_d + 1):
            if all(v == 0 for v in need.values()):
                break
            for qs in itertools.product(q_letters, repeat=n):
                for dpos in itertools.combinations_with_replacement(range(n), dcount):
                    # D letters are inserted left of Q letter p (never rightmost: D|0> = 0)
                    letters = []
                    for p in range(n):
                        letters += [("D",)] * dpos.count(p)
                        letters.append(qs[p])
                    letters = tuple(letters)
                    deg = sum(2 if x[0] == "D" else model.degrees[x[1]] for x in letters)
                    if deg not in need or need[deg] == 0:
                        continue
                    vec = self.word_vector(letters, n)
                    if not vec:
                        continue
                    red = _reduce(echelon[deg], vec)
                    if red:
                        _insert(echelon[deg], red)
                        need[deg] -= 1
                        words.append(GeneratorWord(letters))
                        vecs.append(vec)
            if all(v == 0 for v in need.values()):
                break
        if any(need.values()):
            raise SpanFailure(f"words fail to span weight {n}: missing {need}")
        result = (words, vecs)
        self._cache[key] = result
        return result

    def mult_words(self, k: int, alpha: dict, n: int) -> QMat:
        key = ("SW", k, _key(alpha), n)
        if key in self._cache:
            return self._cache[key]
        if n <= 0:
            return self.calc.zero(n, n)
        words, vecs = self.word_basis(n)
        inv = Fraction(1, factorial(k))
        pa = self.calc.class_parity(alpha)
        images = []
        for word in words:
            letters = word.letters
            total = {}
            odd_left = 0
            for j, letter in enumerate(letters):
                if letter[0] != "Q":
                    continue
                b = letter[1]
                sign = -1 if (pa and odd_left) else 1
                odd_left ^= self.model.parity[b]
                ab = self.calc.mul(alpha, {b: Fraction(1)})
                if not ab:
                    continue
                # right part applied to vacuum
                vec = self.word_vector(letters[j + 1:], n)
                if not vec:
                    continue
                w = sum(1 for x in letters[j + 1:] if x[0] == "Q")
                vec = self._q1k(k, ab, w).apply(vec)
                w += 1
                for letter2 in reversed(letters[:j]):
                    if not vec:
                        break
                    if letter2[0] == "D":
                        vec = self.calc.boundary(w).apply(vec)
                    else:
                        vec = self.calc.q_basis(1, letter2[1], w).apply(vec)
                        w += 1
                for r, v in vec.items():
                    total[r] = total.get(r, 0) + sign * inv * v
            images.append({r: v for r, v in total.items() if v})
        dim = self.dim(n)
        inv_w = solve_square(vecs, dim)
        if inv_w is None:
            raise SpanFailure("word matrix is singular")
        # S = (S W) W^{-1}:  column j of S = sum_t (W^{-1})[t][j] * image_t
        entries = {}
        for t, img in enumerate(images):
            for j, x in inv_w[t].items():
                for r, v in img.items():
                    entries[(r, j)] = entries.get((r, j), 0) + x * v
        mat = QMat.from_entries((dim, dim), ((r, c, v) for (r, c), v in entries.items()))
        self._cache[key] = mat
        return mat


def _reduce(echelon: dict, vec: dict) -> dict:
    vec = dict(vec)
    for p in sorted(echelon):
        if p in vec:
            f = vec[p]
            for k, v in echelon[p].items():
                nv = vec.get(k, 0) - f * v
                if nv:
                    vec[k] = nv
                else:
                    vec.pop(k, None)
    return vec


def _insert(echelon: dict, vec: dict):
    p = min(vec)
    piv = vec[p]
    row = {k: v / piv for k, v in vec.items()}
    # keep rows reduced against the new pivot
    for q, r in echelon.items():
        if p in r:
            f = r[p]
            for k, v in row.items():
                nv = r.get(k, 0) - f * v
                if nv:
                    r[k] = nv
                else:
                    r.pop(k, None)
    echelon[p] = row


_TAUT: dict = {}


def taut_calculus(model: SurfaceModel, config: TautConfig | None = None) -> TautCalculus:
    config = config or TautConfig()
    key = (id(model), config)
    tc = _TAUT.get(key)
    if tc is None or tc.model is not model:
        tc = TautCalculus(model, config)
        _TAUT[key] = tc
    return tc


# public operations

def word_basis(model: SurfaceModel, n: int, config=None):
    tc = taut_calculus(model, config)
    words, vecs = tc.word_basis(n)
    dim = tc.dim(n)

    def solver(v: FockVector) -> dict:
        target = tc.fs.vector_to_dict(v, n)
        inv = solve_square(vecs, dim)
        out = {}
        for t, row in enumerate(inv):
            c = sum((row.get(j, 0) * x for j, x in target.items()), Fraction(0))
            if c:
                out[t] = c
        return out

    return words, vecs, solver


def mult_operator(model: SurfaceModel, k: int, alpha, n: int, config=None):
    from .heisenberg import OperatorBlock

    tc = taut_calculus(model, config)
    alpha = _as_dict(alpha)
    mat = tc.mult(k, alpha, n)
    return OperatorBlock((n, None), (n, None), mat, tc.calc.class_parity(alpha))


def g_class(model: SurfaceModel, k: int, alpha, n: int, config=None) -> FockVector:
    if n == 0:
        return FockVector()
    tc = taut_calculus(model, config)
    mat = tc.mult(k, _as_dict(alpha), n)
    unit = tc.fs.vector_to_dict(unit_vector(model, n), n)
    return tc.fs.dict_to_vector(mat.apply(unit), n)


@dataclass
class RingTable:
    model_name: str
    n: int
    basis: list
    constants: dict  # (i, j) -> {k: Fraction}: b_i b_j = sum_k c b_k
    form: dict  # (i, j) -> Fraction
    unit_index: int  # the unit is unit_coeff * b[unit_index]
    unit_coeff: Fraction
    left: list = field(default_factory=list, repr=False)  # left multiplication matrices

    def product(self, i, j) -> dict:
        return self.constants.get((i, j), {})


class RingBuilder:
    """Cup product on the weight-n block via generator polynomials."""

    def __init__(self, model: SurfaceModel, n: int, config: TautConfig | None = None):
        self.model, self.n = model, n
        self.tc = taut_calculus(model, config)
        self.fs = self.tc.fs
        self.dim = self.fs.dim(n)
        self._left = None
        self.words = None

    def generators(self, bound: int):
        gens = []
        for i in range(bound):
            for a in range(self.model.dim):
                if self.model.degrees[a] + 2 * i == 0:
                    continue  # multiples of the unit never raise rank
                if self.model.degrees[a] + 2 * i > 4 * self.n:
                    continue
                gens.append((i, a))
        return gens

    def _span(self, gens):
        model, n = self.model, self.n
        slices = self.fs.slices(n)
        gmats = {g: self.tc.mult(g[0], {g[1]: Fraction(1)}, n) for g in gens}
        gdeg = {g: model.degrees[g[1]] + 2 * g[0] for g in gens}
        unit = self.fs.vector_to_dict(unit_vector(model, n), n)
        ident = QMat.identity(self.dim)
        accepted = {0: [((), unit, ident)]}
        echelon = {d: {} for d in slices}
        _insert(echelon[0], dict(unit))
        for d in sorted(slices):
            if d == 0:
                continue
            lo, hi = slices[d]
            need = hi - lo
            got = []
            for g in gens:
                if len(got) >= need:
                    break
                pd = d - gdeg[g]
                for word, vec, mat in accepted.get(pd, []):
                    if len(got) >= need:
                        break
                    new = gmats[g].apply(vec)
                    if not new:
                        continue
                    red = _reduce(echelon[d], new)
                    if red:
                        _insert(echelon[d], red)
                        got.append(((g,) + word, new, gmats[g] @ mat))
            if len(got) < need:
                return None, d
            accepted[d] = got
        return accepted, None

    def build(self):
        if self._left is not None:
            return self._left
        model, n = self.model, self.n
        accepted, bad = self._span(self.generators(n))
        if accepted is None:
            if not self.tc.config.fallback_generators:
                raise GenerationFailure(f"generators G_i, i<{n}, fail to span degree {bad} at n={n}")
            log.warning("degree %s not spanned by G_i with i<%s; adding i=%s", bad, n, n)
            accepted, bad = self._span(self.generators(n + 1))
            if accepted is None:
                raise GenerationFailure(f"generators fail to span degree {bad} at n={n}")
        slices = self.fs.slices(n)
        left = [None] * self.dim
        self.words = {}
        for d, (lo, hi) in slices.items():
            items = accepted[d]
            cols = [{r - lo: v for r, v in vec.items()} for _, vec, _ in items]
            inv = solve_square(cols, hi - lo)
            if inv is None:
                raise GenerationFailure(f"degree {d} words are dependent")
            # basis element lo+j = sum_t inv[t][j] * word_t
            coeff_rows = {}
            for t, row in enumerate(inv):
                for j, x in row.items():
                    coeff_rows.setdefault(j, []).append((t, x))
            mats = [m for _, _, m in items]
            for j in range(hi - lo):
                acc = QMat.zeros((self.dim, self.dim))
                for t, x in coeff_rows.get(j, []):
                    acc = acc + mats[t].scale(x)
                left[lo + j] = acc
                self.words[lo + j] = [(items[t][0], x) for t, x in coeff_rows.get(j, [])]
        self._left = left
        return left

    def cup(self, v: FockVector, w: FockVector) -> FockVector:
        left = self.build()
        vd = self.fs.vector_to_dict(v, self.n)
        wd = self.fs.vector_to_dict(w, self.n)
        acc = {}
        for i, c in vd.items():
            for r, x in left[i].apply(wd).items():
                acc[r] = acc.get(r, 0) + c * x
        return self.fs.dict_to_vector({k: v for k, v in acc.items() if v}, self.n)


_BUILDERS: dict = {}


def ring_builder(model: SurfaceModel, n: int, config=None) -> RingBuilder:
    config = config or TautConfig()
    key = (id(model), n, config)
    rb = _BUILDERS.get(key)
    if rb is None or rb.model is not model:
        rb = RingBuilder(model, n, config)
        _BUILDERS[key] = rb
    return rb


def cup(model: SurfaceModel, n: int, v: FockVector, w: FockVector, config=None) -> FockVector:
    return ring_builder(model, n, config).cup(v, w)


def form_matrix(model: SurfaceModel, n: int, config=None) -> dict:
    """B(b_i, b_j) for the weight-n basis, as {(i, j): value}."""
    tc = taut_calculus(model, config)
    calc, fs = tc.calc, tc.fs
    basis = fs.basis(n)
    sign = -1 if n % 2 else 1
    out = {}
    for i, mono in enumerate(basis):
        # q_{-m1}(a1) acts first, q_{-mk}(ak) last
        row = QMat.identity(1)
        w = 0
        for m, a in reversed(mono):
            row = row @ calc.q_basis(-m, a, w + m)
            w += m
        # adjoint of a product of odd operators reverses them: Koszul sign
        odd = [model.parity[a] for _, a in mono]
        rev = sum(odd[x] * odd[y] for x in range(len(odd)) for y in range(x + 1, len(odd))) % 2
        s = -sign if rev else sign
        for (_, j), v in row.to_dict().items():
            out[(i, j)] = s * v
    return out


def intersection_form(model: SurfaceModel, n: int, v: FockVector, w: FockVector, config=None) -> Fraction:
    fs = fock_space(model)
    form = form_matrix(model, n, config)
    vd, wd = fs.vector_to_dict(v, n), fs.vector_to_dict(w, n)
    return sum((x * y * form.get((i, j), 0) for i, x in vd.items() for j, y in wd.items()), Fraction(0))


def ring_table(model: SurfaceModel, n: int, config=None) -> RingTable:
    rb = ring_builder(model, n, config)
    left = rb.build()
    constants = {}
    for i, mat in enumerate(left):
        for (k, j), v in mat.to_dict().items():
            constants.setdefault((i, j), {})[k] = v
    unit_mono = tuple([(1, model.unit_index)] * n)
    unit_index = rb.fs.index(n)[unit_mono]
    return RingTable(model.name, n, list(rb.fs.basis(n)), constants, form_matrix(model, n, config),
                     unit_index, Fraction(1, factorial(n)), left)


def _left_from_constants(table: RingTable):
    dim = len(table.basis)
    if table.left:
        return table.left
    rows = {}
    for (i, j), prod in table.constants.items():
        for k, v in prod.items():
            rows.setdefault(i, []).append((k, j, v))
    return [QMat.from_entries((dim, dim), rows.get(i, [])) for i in range(dim)]


def verify_ring_table(model: SurfaceModel, table: RingTable) -> dict:
    """Exhaustive ring-axiom checks; returns {check name: (passed, detail)}."""
    import scipy.sparse as sp

    dim = len(table.basis)
    par = [sum(model.parity[a] for _, a in mono) % 2 for mono in table.basis]
    left = _left_from_constants(table)
    out = {}

    unit = left[table.unit_index].scale(table.unit_coeff)
    out["unit"] = (unit == QMat.identity(dim), "")

    bad = None
    for (i, j), prod in table.constants.items():
        s = -1 if par[i] and par[j] else 1
        other = {k: s * v for k, v in table.product(j, i).items()}
        if prod != other:
            bad = (i, j)
            break
    if bad is None:
        for (i, j) in table.constants:
            if (j, i) not in table.constants:
                bad = (i, j)
                break
    out["graded-commutative"] = (bad is None, f"pair {bad}" if bad else "")

    # associativity: L_i L_j = sum_l c_ij^l L_l for all i, j
    den = 1
    for m in left:
        den = den * m.den // np.gcd(den, m.den)
    flat_rows, flat_cols, flat_vals = [], [], []
    h_rows, h_cols = [], []
    for l, m in enumerate(left):
        coo = (m.num * (den // m.den)).tocoo()
        flat_rows.append(np.full(coo.nnz, l))
        flat_cols.append(coo.row.astype(np.int64) * dim + coo.col)
        flat_vals.append(coo.data)
        h_rows.append(coo.row.astype(np.int64))
        h_cols.append(l * dim + coo.col.astype(np.int64))
    vals = np.concatenate(flat_vals) if flat_vals else np.zeros(0, dtype=np.int64)
    lflat = QMat(sp.csr_matrix((vals, (np.concatenate(flat_rows), np.concatenate(flat_cols))),
                               shape=(dim, dim * dim), dtype=np.int64), den)
    hmat = QMat(sp.csr_matrix((vals, (np.concatenate(h_rows), np.concatenate(h_cols))),
                              shape=(dim, dim * dim), dtype=np.int64), den)
    bad = None
    for i in range(dim):
        li = left[i]
        if li.is_zero():
            continue
        lt = QMat(li.num.T.tocsr(), li.den)
        a = lt @ lflat  # (j, m*dim+k)
        b = li @ hmat  # (m, j*dim+k)
        coo = b.num.tocoo()
        j = coo.col // dim
        k = coo.col % dim
        b2 = QMat(sp.csr_matrix((coo.data, (j, coo.row.astype(np.int64) * dim + k)), shape=(dim, dim * dim), dtype=np.int64), b.den)
        if not (a - b2).is_zero():
            bad = i
            break
    out["associative"] = (bad is None, f"left factor {bad}" if bad is not None else "")

    bmat = QMat.from_entries((dim, dim), ((i, j, v) for (i, j), v in table.form.items()))
    bad = None
    for j in range(dim):
        lj = left[j]
        lhs = QMat(lj.num.T.tocsr(), lj.den) @ bmat
        if par[j]:
            lhs = QMat(sp.diags([(-1 if p else 1) for p in par], format="csr", dtype=np.int64) @ lhs.num, lhs.den) if lhs.nnz else lhs
        rhs = bmat @ lj
        if not (lhs - rhs).is_zero():
            bad = j
            break
    out["frobenius"] = (bad is None, f"middle factor {bad}" if bad is not None else "")

    rows = [{} for _ in range(dim)]
    for (i, j), v in table.form.items():
        rows[i][j] = v
    r = len(rref(rows, dim)[1])
    out["nondegenerate"] = (r == dim, f"rank {r} of {dim}")
    return out


def transport_table(table: RingTable, target: SurfaceModel, perm) -> RingTable:
    """Rewrite `table` in the Fock basis of `target`, a model whose basis element perm[i] plays the role of e_i."""
    from .fock import canonicalize

    index = fock_space(target).index(table.n)
    move, sign = [], []
    for mono in table.basis:
        s, image = canonicalize(target, [(m, perm[i]) for m, i in mono])
        move.append(index[image])
        sign.append(s)
    constants = {}
    for (i, j), prod in table.constants.items():
        constants[(move[i], move[j])] = {move[k]: v * sign[i] * sign[j] * sign[k] for k, v in prod.items()}
    form = {(move[i], move[j]): v * sign[i] * sign[j] for (i, j), v in table.form.items()}
    basis = [None] * len(move)
    for i, j in enumerate(move):
        basis[j] = canonicalize(target, [(m, perm[a]) for m, a in table.basis[i]])[1]
    return RingTable(target.name, table.n, basis, constants, form, move[table.unit_index],
                     table.unit_coeff * sign[table.unit_index])


def same_table(a: RingTable, b: RingTable) -> bool:
    """Exact equality of bases, structure constants, form and unit."""
    strip = lambda d: {k: {x: y for x, y in v.items() if y} for k, v in d.items() if any(v.values())}
    return (list(a.basis) == list(b.basis) and strip(a.constants) == strip(b.constants)
            and {k: v for k, v in a.form.items() if v} == {k: v for k, v in b.form.items() if v}
            and a.unit_index == b.unit_index and a.unit_coeff == b.unit_coeff)
