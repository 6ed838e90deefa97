"""Fock space with the canonical Nakajima monomial basis.

A monomial is a tuple of (m, idx) factors sorted by m descending, then idx
ascending, standing for q_{m1}(e_{i1}) ... q_{mk}(e_{ik})|0>.
"""
from __future__ import annotations

import bisect
import re
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Iterable

from .errors import SchemaError, UnknownName
from .frobenius import SurfaceClass, SurfaceModel

VACUUM: tuple = ()


def factor_key(f):
    return (-f[0], f[1])


def weight(mono) -> int:
    return sum(m for m, _ in mono)


def degree(model: SurfaceModel, mono) -> int:
    return sum(model.degrees[i] + 2 * (m - 1) for m, i in mono)


def parity(model: SurfaceModel, mono) -> int:
    return sum(model.parity[i] for _, i in mono) % 2


def is_canonical(model: SurfaceModel, mono) -> bool:
    keys = [factor_key(f) for f in mono]
    if keys != sorted(keys):
        return False
    for a, b in zip(mono, mono[1:]):
        if a == b and model.parity[a[1]]:
            return False
    return True


def canonicalize(model: SurfaceModel, factors) -> tuple[int, tuple]:
    """Sort a word of creations; returns (sign, monomial) with sign 0 for odd squares."""
    items = list(factors)
    sign = 1
    # insertion sort tracking odd transpositions
    for i in range(1, len(items)):
        j = i
        while j > 0 and factor_key(items[j - 1]) > factor_key(items[j]):
            if model.parity[items[j - 1][1]] and model.parity[items[j][1]]:
                sign = -sign
            items[j - 1], items[j] = items[j], items[j - 1]
            j -= 1
    for a, b in zip(items, items[1:]):
        if a == b and model.parity[a[1]]:
            return 0, tuple(items)
    return sign, tuple(items)


class FockVector:
    """Sparse rational combination of canonical monomials."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        for k, v in (terms or {}).items():
            v = Fraction(v)
            if v:
                self.terms[tuple(k)] = self.terms.get(tuple(k), 0) + v
        self.terms = {k: v for k, v in self.terms.items() if v}

    @classmethod
    def vacuum(cls) -> "FockVector":
        return cls({VACUUM: 1})

    def __add__(self, other):
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return FockVector(out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c):
        c = Fraction(c)
        return FockVector({k: c * v for k, v in self.terms.items()})

    def __rmul__(self, c):
        return self.scale(c)

    def __eq__(self, other):
        return isinstance(other, FockVector) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self):
        return not self.terms

    def weights(self):
        return {weight(k) for k in self.terms}

    def weight(self):
        w = self.weights()
        return w.pop() if len(w) == 1 else None

    def degree(self, model):
        d = {degree(model, k) for k in self.terms}
        return d.pop() if len(d) == 1 else None

    def __repr__(self):
        if not self.terms:
            return "FockVector(0)"
        return "FockVector(" + " + ".join(f"{v}*{k}" for k, v in sorted(self.terms.items())) + ")"


def _as_vector(v) -> FockVector:
    return v if isinstance(v, FockVector) else FockVector(v)


def insert_factor(model: SurfaceModel, m: int, idx: int, mono: tuple) -> tuple[int, tuple]:
    """q_m(e_idx) applied to a canonical monomial: (sign, new monomial)."""
    key = (-m, idx)
    keys = [factor_key(f) for f in mono]
    pos = bisect.bisect_left(keys, key)
    if model.parity[idx]:
        if pos < len(mono) and mono[pos] == (m, idx):
            return 0, mono
        odd = sum(model.parity[f[1]] for f in mono[:pos]) % 2
        sign = -1 if odd else 1
    else:
        sign = 1
    return sign, mono[:pos] + ((m, idx),) + mono[pos:]


def remove_terms(model: SurfaceModel, m: int, pairing_row, x_parity: int, mono: tuple):
    """q_{-m}(x) on a monomial, pairing_row[j] = integral(x e_j).  Yields (coeff, monomial)."""
    odd_before = 0
    for pos, (mm, j) in enumerate(mono):
        if mm == m:
            g = pairing_row[j]
            if g:
                sign = -1 if (x_parity and odd_before) else 1
                yield sign * (-m) * g, mono[:pos] + mono[pos + 1:]
        odd_before ^= model.parity[j]


def create(model: SurfaceModel, m: int, alpha: SurfaceClass, v) -> FockVector:
    if m < 1:
        raise ValueError("creation weight must be positive")
    v = _as_vector(v)
    out = {}
    for idx, a in alpha.coeffs.items():
        for mono, c in v.terms.items():
            s, new = insert_factor(model, m, idx, mono)
            if s:
                out[new] = out.get(new, 0) + s * a * c
    return FockVector(out)


def annihilate(model: SurfaceModel, m: int, alpha: SurfaceClass, v) -> FockVector:
    """q_{-m}(alpha), computed by commuting it rightward to the vacuum."""
    if m < 1:
        raise ValueError("annihilation weight must be positive")
    v = _as_vector(v)
    out = {}
    for idx, a in alpha.coeffs.items():
        row = model.gram[idx]
        for mono, c in v.terms.items():
            for coeff, new in remove_terms(model, m, row, model.parity[idx], mono):
                out[new] = out.get(new, 0) + a * c * coeff
    return FockVector(out)


def apply_q(model: SurfaceModel, m: int, alpha: SurfaceClass, v) -> FockVector:
    """q_m(alpha) for any integer m (q_0 = 0)."""
    if m > 0:
        return create(model, m, alpha, v)
    if m < 0:
        return annihilate(model, -m, alpha, v)
    return FockVector()


def normalize(model: SurfaceModel, word) -> FockVector:
    """word: sequence of (m, SurfaceClass) creations, leftmost applied last."""
    v = FockVector.vacuum()
    for m, cls in reversed(list(word)):
        v = create(model, m, cls, v)
    return v


# basis

def _partitions(n, largest=None):
    if largest is None:
        largest = n
    if n == 0:
        yield ()
        return
    for k in range(min(n, largest), 0, -1):
        for rest in _partitions(n - k, k):
            yield (k,) + rest


class FockSpace:
    """Per-model basis enumeration with memoized index maps."""

    def __init__(self, model: SurfaceModel):
        self.model = model
        self._blocks = {}

    def basis(self, n: int) -> list:
        return self._block(n)[0]

    def index(self, n: int) -> dict:
        return self._block(n)[1]

    def slices(self, n: int) -> dict:
        """degree -> (start, stop) within the weight-n basis."""
        return self._block(n)[2]

    def _block(self, n):
        if n not in self._blocks:
            model = self.model
            monos = []
            for part in _partitions(n):
                mult = {}
                for k in part:
                    mult[k] = mult.get(k, 0) + 1
                choices = [[]]
                for k in sorted(mult, reverse=True):
                    opts = [
                        c for c in combinations_with_replacement(range(model.dim), mult[k])
                        if not any(c[i] == c[i + 1] and model.parity[c[i]] for i in range(len(c) - 1))
                    ]
                    choices = [prev + [(k, i) for i in c] for prev in choices for c in opts]
                monos += [tuple(c) for c in choices]
            monos.sort(key=lambda mono: (degree(model, mono), tuple(factor_key(f) for f in mono)))
            index = {mono: i for i, mono in enumerate(monos)}
            slices = {}
            for i, mono in enumerate(monos):
                d = degree(model, mono)
                lo, _ = slices.get(d, (i, i))
                slices[d] = (lo, i + 1)
            self._blocks[n] = (monos, index, slices)
        return self._blocks[n]

    def dim(self, n: int) -> int:
        return len(self.basis(n))

    def vector_to_dict(self, v: FockVector, n: int) -> dict:
        idx = self.index(n)
        out = {}
        for mono, c in v.terms.items():
            if weight(mono) != n:
                raise ValueError(f"monomial {mono} is not of weight {n}")
            out[idx[mono]] = c
        return out

    def dict_to_vector(self, d: dict, n: int) -> FockVector:
        basis = self.basis(n)
        return FockVector({basis[i]: c for i, c in d.items()})


_SPACES: dict = {}


def fock_space(model: SurfaceModel) -> FockSpace:
    key = id(model)
    if key not in _SPACES or _SPACES[key].model is not model:
        _SPACES[key] = FockSpace(model)
    return _SPACES[key]


def basis(model: SurfaceModel, n: int) -> list:
    return list(fock_space(model).basis(n))


def block_dim(model: SurfaceModel, n: int, d: int) -> int:
    lo, hi = fock_space(model).slices(n).get(d, (0, 0))
    return hi - lo


def unit_vector(model: SurfaceModel, n: int) -> FockVector:
    """1_n = q_1(1)^n |0> / n!."""
    from math import factorial

    return FockVector({tuple([(1, model.unit_index)] * n): Fraction(1, factorial(n))})


# text syntax

_TOKEN = re.compile(r"q(\d+)\(([^()]*)\)")


def format_monomial(model: SurfaceModel, mono) -> str:
    if not mono:
        return "1"
    return " ".join(f"q{m}({model.names[i]})" for m, i in mono)


def parse_monomial(model: SurfaceModel, text: str) -> FockVector:
    """Parse "q2(h) q1(1)" (any order) into a normalized vector."""
    text = text.strip()
    if text in ("", "1", "|0>", "vac"):
        return FockVector.vacuum()
    pos, factors = 0, []
    for mt in _TOKEN.finditer(text):
        if text[pos:mt.start()].strip():
            raise SchemaError(f"cannot parse monomial {text!r}")
        name = mt.group(2).strip()
        if name not in model.index:
            raise UnknownName(f"unknown class {name!r} in monomial {text!r}")
        m = int(mt.group(1))
        if m < 1:
            raise SchemaError(f"creation weight must be positive in {text!r}")
        factors.append((m, model.index[name]))
        pos = mt.end()
    if text[pos:].strip() or not factors:
        raise SchemaError(f"cannot parse monomial {text!r}")
    s, mono = canonicalize(model, factors)
    return FockVector({mono: s}) if s else FockVector()


def vector_to_json(model: SurfaceModel, v: FockVector) -> list:
    fs = fock_space(model)
    rows = []
    for mono, c in v.terms.items():
        rows.append((degree(model, mono), tuple(factor_key(f) for f in mono), mono, c))
    rows.sort(key=lambda r: (weight(r[2]), r[0], r[1]))
    return [{"monomial": format_monomial(model, mono), "num": c.numerator, "den": c.denominator} for _, _, mono, c in rows]


def vector_from_json(model: SurfaceModel, data: Iterable) -> FockVector:
    out = FockVector()
    try:
        for entry in data:
            c = Fraction(int(entry["num"]), int(entry.get("den", 1)))
            out = out + parse_monomial(model, entry["monomial"]).scale(c)
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"malformed vector entry: {exc}") from exc
    return out
