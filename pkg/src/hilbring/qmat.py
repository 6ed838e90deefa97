"""Exact sparse rational matrices.

A QMat is an int64 CSR numerator matrix together with one positive Python
integer denominator.  Every product is guarded: if the int64 result could
overflow, the operation falls back to Python integers.  All results are
exact.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm

import numpy as np
import scipy.sparse as sp

_SAFE = 2.0 ** 62


def _csr(shape, rows=(), cols=(), vals=()):
    return sp.csr_matrix(
        (np.asarray(vals, dtype=np.int64), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
        shape=shape,
        dtype=np.int64,
    )


class QMat:
    __slots__ = ("num", "den", "_big")

    def __init__(self, num, den: int = 1, big=None):
        # big: optional dict {(i, j): int} used when entries exceed int64
        self.num = num
        self.den = int(den)
        self._big = big
        if big is None:
            self._reduce()

    # construction
    @classmethod
    def zeros(cls, shape) -> "QMat":
        return cls(_csr(shape))

    @classmethod
    def identity(cls, n: int) -> "QMat":
        return cls(sp.identity(n, dtype=np.int64, format="csr"))

    @classmethod
    def from_entries(cls, shape, entries) -> "QMat":
        """entries: iterable of (row, col, Fraction-like); duplicates are summed."""
        acc = {}
        for r, c, v in entries:
            v = Fraction(v)
            if v:
                acc[(r, c)] = acc.get((r, c), 0) + v
        acc = {k: v for k, v in acc.items() if v}
        den = 1
        for v in acc.values():
            den = lcm(den, v.denominator)
        ints = {k: int(v * den) for k, v in acc.items()}
        return cls._from_int_dict(shape, ints, den)

    @classmethod
    def _from_int_dict(cls, shape, ints, den):
        if ints and max(abs(v) for v in ints.values()) >= 2 ** 62:
            g = 0
            for v in ints.values():
                g = gcd(g, v)
            g = gcd(g, den)
            if g > 1:
                ints = {k: v // g for k, v in ints.items()}
                den //= g
            if max(abs(v) for v in ints.values()) >= 2 ** 62:
                return cls(None, den, big=(shape, ints))
        keys = list(ints)
        return cls(_csr(shape, [k[0] for k in keys], [k[1] for k in keys], [ints[k] for k in keys]), den)

    # helpers
    @property
    def shape(self):
        return self._big[0] if self._big is not None else self.num.shape

    def _reduce(self):
        m = self.num
        m.eliminate_zeros()
        if m.nnz == 0:
            self.den = 1
            return
        if self.den == 1:
            return
        g = int(np.gcd.reduce(np.abs(m.data)))
        g = gcd(g, self.den)
        if g > 1:
            m.data //= g
            self.den //= g

    def _int_dict(self):
        if self._big is not None:
            return dict(self._big[1])
        coo = self.num.tocoo()
        return {(int(r), int(c)): int(v) for r, c, v in zip(coo.row, coo.col, coo.data)}

    def _maxabs(self) -> float:
        if self._big is not None:
            return float(max((abs(v) for v in self._big[1].values()), default=0))
        if self.num.nnz == 0:
            return 0.0
        return float(np.abs(self.num.data).max())

    @property
    def nnz(self) -> int:
        if self._big is not None:
            return len(self._big[1])
        return self.num.nnz

    def is_zero(self) -> bool:
        return self.nnz == 0

    # arithmetic
    def __add__(self, other: "QMat") -> "QMat":
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        den = lcm(self.den, other.den)
        fa, fb = den // self.den, den // other.den
        if self._big is None and other._big is None and self._maxabs() * fa + other._maxabs() * fb < _SAFE:
            return QMat(self.num * fa + other.num * fb, den)
        a, b = self._int_dict(), other._int_dict()
        out = {k: v * fa for k, v in a.items()}
        for k, v in b.items():
            out[k] = out.get(k, 0) + v * fb
        return QMat._from_int_dict(self.shape, {k: v for k, v in out.items() if v}, den)

    def __neg__(self) -> "QMat":
        return self.scale(-1)

    def __sub__(self, other: "QMat") -> "QMat":
        return self + other.scale(-1)

    def scale(self, c) -> "QMat":
        c = Fraction(c)
        if c == 0:
            return QMat.zeros(self.shape)
        if c == 1:
            return self
        if self._big is None and self._maxabs() * abs(c.numerator) < _SAFE:
            return QMat(self.num * c.numerator, self.den * c.denominator)
        ints = {k: v * c.numerator for k, v in self._int_dict().items()}
        return QMat._from_int_dict(self.shape, ints, self.den * c.denominator)

    def __matmul__(self, other: "QMat") -> "QMat":
        if self.shape[1] != other.shape[0]:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        shape = (self.shape[0], other.shape[1])
        if self.is_zero() or other.is_zero():
            return QMat.zeros(shape)
        den = self.den * other.den
        if self._big is None and other._big is None:
            a, b = self.num, other.num
            rowsum = np.abs(a).sum(axis=1).max()
            if float(rowsum) * other._maxabs() < _SAFE:
                return QMat(a @ b, den)
            fa = abs(a).astype(np.float64)
            fb = abs(b).astype(np.float64)
            bound = (fa @ fb)
            if bound.nnz == 0 or bound.data.max() < _SAFE:
                return QMat(a @ b, den)
        return QMat._from_int_dict(shape, _dict_matmul(self._int_dict(), other._int_dict()), den)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QMat) or self.shape != other.shape:
            return False
        return (self - other).is_zero()

    def __hash__(self):
        raise TypeError("QMat is not hashable")

    # slicing and assembly
    def cols(self, idx) -> "QMat":
        if self._big is not None:
            pos = {c: i for i, c in enumerate(idx)}
            ints = {(r, pos[c]): v for (r, c), v in self._big[1].items() if c in pos}
            return QMat._from_int_dict((self.shape[0], len(idx)), ints, self.den)
        return QMat(self.num[:, idx], self.den)

    def rows(self, idx) -> "QMat":
        if self._big is not None:
            pos = {r: i for i, r in enumerate(idx)}
            ints = {(pos[r], c): v for (r, c), v in self._big[1].items() if r in pos}
            return QMat._from_int_dict((len(idx), self.shape[1]), ints, self.den)
        return QMat(self.num[idx, :], self.den)

    def block(self, r0, r1, c0, c1) -> "QMat":
        return self.rows(list(range(r0, r1))).cols(list(range(c0, c1)))

    @staticmethod
    def hstack(mats, nrows=None) -> "QMat":
        if not mats:
            return QMat.zeros((nrows or 0, 0))
        den = 1
        for m in mats:
            den = lcm(den, m.den)
        if all(m._big is None for m in mats) and all(m._maxabs() * (den // m.den) < _SAFE for m in mats):
            return QMat(sp.hstack([m.num * (den // m.den) for m in mats], format="csr", dtype=np.int64), den)
        ints, off = {}, 0
        for m in mats:
            f = den // m.den
            for (r, c), v in m._int_dict().items():
                ints[(r, c + off)] = v * f
            off += m.shape[1]
        return QMat._from_int_dict((mats[0].shape[0], off), ints, den)

    def scatter_cols(self, ncols, positions) -> "QMat":
        """Place column j of self at column positions[j] of a wider matrix."""
        if self._big is not None:
            ints = {(r, positions[c]): v for (r, c), v in self._big[1].items()}
            return QMat._from_int_dict((self.shape[0], ncols), ints, self.den)
        coo = self.num.tocoo()
        pos = np.asarray(positions, dtype=np.int64)
        return QMat(_csr((self.shape[0], ncols), coo.row, pos[coo.col] if coo.nnz else [], coo.data), self.den)

    def scale_cols(self, signs) -> "QMat":
        """Multiply column j by the integer signs[j]."""
        d = sp.diags(np.asarray(signs, dtype=np.int64), format="csr", dtype=np.int64)
        if self._big is not None:
            return QMat._from_int_dict(self.shape, {(r, c): v * int(signs[c]) for (r, c), v in self._big[1].items()}, self.den)
        return QMat(self.num @ d, self.den)

    # conversion
    def entries(self):
        """Yield (row, col, Fraction)."""
        for (r, c), v in sorted(self._int_dict().items()):
            yield r, c, Fraction(v, self.den)

    def to_dict(self):
        return {(r, c): v for r, c, v in self.entries()}

    def column(self, j):
        return {r: v for (r, c), v in self.cols([j]).to_dict().items()}

    def apply(self, vec):
        """vec: {index: Fraction} -> {index: Fraction}."""
        if not vec:
            return {}
        keys = sorted(vec)
        sub = self.cols(keys)
        out = {}
        for (r, c), v in sub.to_dict().items():
            out[r] = out.get(r, 0) + v * vec[keys[c]]
        return {k: v for k, v in out.items() if v}

    def dense(self):
        rows, cols = self.shape
        out = [[Fraction(0)] * cols for _ in range(rows)]
        for r, c, v in self.entries():
            out[r][c] = v
        return out

    def __repr__(self):
        return f"QMat(shape={self.shape}, nnz={self.nnz}, den={self.den})"


def _dict_matmul(a: dict, b: dict) -> dict:
    brows = {}
    for (r, c), v in b.items():
        brows.setdefault(r, []).append((c, v))
    out = {}
    for (r, k), v in a.items():
        for c, w in brows.get(k, ()):
            out[(r, c)] = out.get((r, c), 0) + v * w
    return {k: v for k, v in out.items() if v}


def vstack(mats) -> QMat:
    den = 1
    for m in mats:
        den = lcm(den, m.den)
    ints, off = {}, 0
    for m in mats:
        f = den // m.den
        for (r, c), v in m._int_dict().items():
            ints[(r + off, c)] = v * f
        off += m.shape[0]
    return QMat._from_int_dict((off, mats[0].shape[1]), ints, den)


# exact dense elimination over Q

def rref(rows, ncols):
    """Reduced row echelon form of a list of {col: Fraction} rows.

    Returns (reduced rows, pivot columns, transform) where transform[i] gives the
    combination of input rows producing reduced row i.
    """
    work = []
    for i, r in enumerate(rows):
        work.append(({k: Fraction(v) for k, v in r.items() if v}, {i: Fraction(1)}))
    pivots = []
    out = []
    for col in range(ncols):
        piv = next((i for i, (r, _) in enumerate(work) if col in r), None)
        if piv is None:
            continue
        r, t = work.pop(piv)
        p = r[col]
        r = {k: v / p for k, v in r.items()}
        t = {k: v / p for k, v in t.items()}
        new_work = []
        for r2, t2 in work:
            f = r2.get(col)
            if f:
                r2 = _axpy(r2, r, -f)
                t2 = _axpy(t2, t, -f)
            new_work.append((r2, t2))
        work = new_work
        out2 = []
        for r2, t2 in out:
            f = r2.get(col)
            if f:
                r2 = _axpy(r2, r, -f)
                t2 = _axpy(t2, t, -f)
            out2.append((r2, t2))
        out = out2
        out.append((r, t))
        pivots.append(col)
    return [r for r, _ in out], pivots, [t for _, t in out]


def _axpy(y, x, a):
    out = dict(y)
    for k, v in x.items():
        w = out.get(k, 0) + a * v
        if w:
            out[k] = w
        else:
            out.pop(k, None)
    return out


def rank(rows, ncols) -> int:
    return len(rref(rows, ncols)[1])


def solve_square(columns, n):
    """Invert the n x n matrix whose j-th column is columns[j] ({row: value}).

    Returns inverse rows as list of {col: Fraction}, or None if singular.
    """
    # rows of the transpose are the columns; invert transpose then transpose back
    red, piv, trans = rref(columns, n)
    if len(piv) != n:
        return None
    # trans[i] * columns = e_{piv[i]}  => (C^T)^{-1} row piv[i] = trans[i]
    inv_t = [None] * n
    for i, p in enumerate(piv):
        inv_t[p] = trans[i]
    # C^{-1} = ((C^T)^{-1})^T
    inv = [dict() for _ in range(n)]
    for p in range(n):
        for k, v in inv_t[p].items():
            inv[k][p] = v
    return inv
