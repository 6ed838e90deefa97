"""Chen-Ruan cohomology of the symmetric product S^n X for even models.

Elements live in the full group algebra: a dict keyed by (perm, labels)
where perm is a tuple image list on {0..n-1} and labels holds one basis
index per orbit of perm, orbits ordered by their smallest element.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Optional

import sympy

from .errors import OddCohomologyUnsupported, PreconditionFailed
from .fock import degree as mono_degree, fock_space
from .frobenius import SurfaceClass, SurfaceModel, multiply_out, coproduct


def orbits(perm) -> list:
    n = len(perm)
    seen, out = set(), []
    for s in range(n):
        if s in seen:
            continue
        orb, x = [], s
        while x not in seen:
            seen.add(x)
            orb.append(x)
            x = perm[x]
        out.append(tuple(sorted(orb)))
    return out


def compose(s, t):
    """(s t)(x) = s(t(x))."""
    return tuple(s[t[x]] for x in range(len(t)))


def inverse(s):
    out = [0] * len(s)
    for i, x in enumerate(s):
        out[x] = i
    return tuple(out)


def age(perm) -> int:
    return sum(len(o) - 1 for o in orbits(perm))


@dataclass
class SectorElement:
    perm: tuple
    orbit_labels: dict  # orbit tuple -> SurfaceClass

    def age(self):
        return age(self.perm)

    def cr_degree(self, model: SurfaceModel):
        deg = 2 * self.age()
        for c in self.orbit_labels.values():
            d = model.class_degree(c)
            deg += d or 0
        return deg

    def expand(self) -> dict:
        orbs = orbits(self.perm)
        if set(orbs) != set(self.orbit_labels):
            raise ValueError("labels must cover exactly the orbits of the permutation")
        out = {}
        for combo in itertools.product(*(self.orbit_labels[o].coeffs.items() for o in orbs)):
            c = Fraction(1)
            for _, v in combo:
                c *= v
            key = (tuple(self.perm), tuple(i for i, _ in combo))
            out[key] = out.get(key, 0) + c
        return {k: v for k, v in out.items() if v}


def _require_even(model: SurfaceModel):
    if any(model.parity):
        raise OddCohomologyUnsupported(f"model {model.name!r} has odd classes; the orbifold product is only defined here for even cohomology")


class CRCalculus:
    def __init__(self, model: SurfaceModel, n: int):
        _require_even(model)
        self.model, self.n = model, n
        eul = multiply_out(model, coproduct(model, 2, model.unit()))
        self.eul = dict(eul.coeffs)
        self._elem = {}
        self._copro = {}

    def _mul(self, a: dict, b: dict) -> dict:
        out = {}
        for i, x in a.items():
            for j, y in b.items():
                for k, c in self.model.mul_basis(i, j).items():
                    out[k] = out.get(k, 0) + x * y * c
        return {k: v for k, v in out.items() if v}

    def _split(self, x: dict, r: int) -> dict:
        """r-fold coproduct of a class: {tuple of r indices: coeff}."""
        if r == 1:
            return {(i,): v for i, v in x.items()}
        out = {}
        for i, v in x.items():
            key = (i, r)
            if key not in self._copro:
                base = self.model.coproduct_basis(i)
                if r == 2:
                    res = dict(base)
                else:
                    res = {}
                    for (a, b), w in base.items():
                        for tail, u in self._split({b: Fraction(1)}, r - 1).items():
                            t = (a,) + tail
                            res[t] = res.get(t, 0) + w * u
                self._copro[key] = res
            for t, w in self._copro[key].items():
                out[t] = out.get(t, 0) + v * w
        return {k: v for k, v in out.items() if v}

    def elementary(self, s, a, t, b) -> dict:
        """(a, s)(b, t) for basis labels a, b."""
        key = (s, a, t, b)
        if key in self._elem:
            return self._elem[key]
        n = self.n
        st = compose(s, t)
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for x in range(n):
            for p in (s, t):
                ra, rb = find(x), find(p[x])
                if ra != rb:
                    parent[ra] = rb
        h_orbits = {}
        for x in range(n):
            h_orbits.setdefault(find(x), []).append(x)
        s_orb, t_orb, st_orb = orbits(s), orbits(t), orbits(st)
        per_orbit = []
        for members in h_orbits.values():
            mset = set(members)
            subs = [o for o in s_orb if o[0] in mset]
            subt = [o for o in t_orb if o[0] in mset]
            subst = [o for o in st_orb if o[0] in mset]
            twice_g = len(members) + 2 - len(subs) - len(subt) - len(subst)
            g = twice_g // 2
            cls = {self.model.unit_index: Fraction(1)}
            for o in subs:
                cls = self._mul(cls, {a[s_orb.index(o)]: Fraction(1)})
            for o in subt:
                cls = self._mul(cls, {b[t_orb.index(o)]: Fraction(1)})
            for _ in range(g):
                cls = self._mul(cls, self.eul)
            if not cls:
                self._elem[key] = {}
                return {}
            per_orbit.append(([st_orb.index(o) for o in subst], self._split(cls, len(subst))))
        out = {}
        nst = len(st_orb)
        for combo in itertools.product(*(p[1].items() for p in per_orbit)):
            labels = [None] * nst
            c = Fraction(1)
            for (positions, _), (tup, v) in zip(per_orbit, combo):
                for pos, idx in zip(positions, tup):
                    labels[pos] = idx
                c *= v
            k = (st, tuple(labels))
            out[k] = out.get(k, 0) + c
        out = {k: v for k, v in out.items() if v}
        self._elem[key] = out
        return out

    def product(self, x: dict, y: dict) -> dict:
        out = {}
        for (s, a), u in x.items():
            for (t, b), v in y.items():
                for k, w in self.elementary(s, a, t, b).items():
                    out[k] = out.get(k, 0) + u * v * w
        return {k: v for k, v in out.items() if v}

    def conjugate(self, g, key):
        s, labels = key
        gi = inverse(g)
        new = compose(compose(g, s), gi)
        old_orbits = orbits(s)
        new_orbits = orbits(new)
        out = [None] * len(new_orbits)
        for o, lab in zip(old_orbits, labels):
            image = tuple(sorted(g[x] for x in o))
            out[new_orbits.index(image)] = lab
        return (new, tuple(out))

    def symmetrize(self, x: dict) -> dict:
        out = {}
        for g in itertools.permutations(range(self.n)):
            for key, v in x.items():
                k = self.conjugate(g, key)
                out[k] = out.get(k, 0) + v
        return {k: v for k, v in out.items() if v}


def _representative(n, mono):
    """Permutation with consecutive cycles of lengths m_i and labels a_i."""
    perm = list(range(n))
    start = 0
    labels = []
    for m, a in mono:
        cyc = list(range(start, start + m))
        for i, x in enumerate(cyc):
            perm[x] = cyc[(i + 1) % m]
        labels.append(a)
        start += m
    # cycles occupy consecutive blocks, so orbit order (by smallest element) is factor order
    return tuple(perm), tuple(labels)


@dataclass
class CRRing:
    n: int
    basis: list  # Nakajima monomials indexing the symmetrized sector elements
    elements: list  # symmetrized elements (dicts)
    constants: dict  # (i, j) -> {k: Fraction}
    degrees: list
    unit_index: int
    unit_coeff: Fraction


def cr_basis(model: SurfaceModel, n: int) -> list:
    _require_even(model)
    calc = CRCalculus(model, n)
    out = []
    for mono in fock_space(model).basis(n):
        perm, labels = _representative(n, mono)
        out.append(calc.symmetrize({(perm, labels): Fraction(1)}))
    return out


def cr_product(model: SurfaceModel, x, y, n: Optional[int] = None) -> dict:
    """Product of two elements (dicts or SectorElements) in the full group algebra."""
    _require_even(model)
    if isinstance(x, SectorElement):
        x = x.expand()
    if isinstance(y, SectorElement):
        y = y.expand()
    if n is None:
        n = len(next(iter(x))[0]) if x else len(next(iter(y))[0])
    return CRCalculus(model, n).product(x, y)


def cr_ring(model: SurfaceModel, n: int) -> CRRing:
    _require_even(model)
    calc = CRCalculus(model, n)
    fs = fock_space(model)
    basis = list(fs.basis(n))
    elements, reps = [], []
    for mono in basis:
        perm, labels = _representative(n, mono)
        elem = calc.symmetrize({(perm, labels): Fraction(1)})
        elements.append(elem)
        reps.append(((perm, labels), elem[(perm, labels)]))
    lookup = {}
    for k, elem in enumerate(elements):
        for key in elem:
            lookup[key] = k
    rep_of = [r for r, _ in reps]
    constants = {}
    for i in range(len(basis)):
        for j in range(i, len(basis)):
            prod = calc.product(elements[i], elements[j])
            res = {}
            for k, (rk, ck) in enumerate(reps):
                v = prod.get(rk)
                if v:
                    res[k] = v / ck
            # every key of an invariant product belongs to some basis element
            for key in prod:
                if key not in lookup:
                    raise AssertionError(f"product left the invariant span at {key}")
            constants[(i, j)] = res
            constants[(j, i)] = res
    unit_mono = tuple([(1, model.unit_index)] * n)
    ui = fs.index(n)[unit_mono]
    degrees = [mono_degree(model, m) for m in basis]
    # symmetrized q1(1)^n is n! times the unit of the group algebra
    return CRRing(n, basis, elements, constants, degrees, ui, Fraction(1, factorial(n)))


# comparison with the Hilbert scheme ring

@dataclass
class CompareReport:
    iso_found: bool
    cycle_scalars: dict  # m -> (rational r_m, power of i)
    residual: int
    field: str
    detail: str = ""

    def describe(self):
        parts = []
        for m, (r, p) in sorted(self.cycle_scalars.items()):
            parts.append(f"c{m} = {r}" + (f"*i^{p}" if p % 4 else ""))
        return f"iso_found={self.iso_found} field={self.field} residual={self.residual} " + ", ".join(parts)


def _cycle_type(n, mono):
    vec = [0] * (n + 1)
    for m, _ in mono:
        vec[m] += 1
    return vec


def _solve_exponents(eqs, n):
    """eqs: list of (exponent vector e over m=1..n, positive Fraction q) with prod |c_m|^e_m = q.

    Returns {m: Fraction} or None.
    """
    primes = set()
    for _, q in eqs:
        for x in (q.numerator, q.denominator):
            primes |= set(sympy.factorint(x))
    sol = {m: Fraction(1) for m in range(1, n + 1)}
    for p in sorted(primes):
        rows = []
        for e, q in eqs:
            v = sympy.multiplicity(p, q.numerator) - sympy.multiplicity(p, q.denominator)
            rows.append(list(e[1:]) + [v])
        mat = sympy.Matrix(rows)
        a, b = mat[:, :n], mat[:, n]
        try:
            x, params = a.gauss_jordan_solve(b)
        except ValueError:
            return None
        x = x.subs({t: 0 for t in params})
        for m in range(1, n + 1):
            y = sympy.Rational(x[m - 1])
            if y.q != 1:
                return None
            sol[m] *= Fraction(p) ** int(y)
    return sol


def _solve_signs(eqs, n):
    """GF(2) system sum e_m t_m = b; returns list of bits or None."""
    rows = [([x % 2 for x in e[1:]], b % 2) for e, b in eqs]
    piv_rows, pivots = [], []
    for coeffs, b in rows:
        coeffs = coeffs[:]
        for (pc, pb), col in zip(piv_rows, pivots):
            if coeffs[col]:
                coeffs = [(x + y) % 2 for x, y in zip(coeffs, pc)]
                b = (b + pb) % 2
        lead = next((c for c, x in enumerate(coeffs) if x), None)
        if lead is None:
            if b:
                return None
            continue
        for idx, ((pc, pb), col) in enumerate(zip(piv_rows, pivots)):
            if pc[lead]:
                piv_rows[idx] = ([(x + y) % 2 for x, y in zip(pc, coeffs)], (pb + b) % 2)
        piv_rows.append((coeffs, b))
        pivots.append(lead)
    bits = [0] * n
    for (pc, pb), col in zip(piv_rows, pivots):
        bits[col] = pb
    return bits


def _gauss_mul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _scalar_power(scalars, vec):
    """prod_m c_m^vec[m] as a Gaussian rational (re, im)."""
    out = (Fraction(1), Fraction(0))
    ipow = [(1, 0), (0, 1), (-1, 0), (0, -1)]
    for m, k in enumerate(vec):
        if m == 0 or k == 0:
            continue
        r, p = scalars[m]
        i = ipow[(p * k) % 4]
        out = _gauss_mul(out, (r ** k * i[0], r ** k * i[1]))
    return out


def compare_rings(model: SurfaceModel, n: int, allow_c1=False, hilbert_table=None, config=None) -> CompareReport:
    """Search per-cycle-length scalars making monomial -> sector a ring isomorphism."""
    from .taut_ring import ring_table

    _require_even(model)
    if model.c1.coeffs and not allow_c1:
        raise PreconditionFailed("compare_rings needs c1 = 0 (override with allow_c1 for diagnostics)")
    table = hilbert_table or ring_table(model, n, config)
    cr = cr_ring(model, n)
    if table.basis != cr.basis:
        raise AssertionError("Hilbert and orbifold bases are not aligned")
    dim = len(cr.basis)
    types = [_cycle_type(n, mono) for mono in cr.basis]
    eqs, zero_mismatch = [], 0
    triples = []
    for i in range(dim):
        for j in range(dim):
            h = table.product(i, j)
            r = cr.constants.get((i, j), {})
            for k in set(h) | set(r):
                hv, rv = h.get(k, 0), r.get(k, 0)
                triples.append((i, j, k, hv, rv))
                if (hv == 0) != (rv == 0):
                    zero_mismatch += 1
                    continue
                e = [types[i][m] + types[j][m] - types[k][m] for m in range(n + 1)]
                eqs.append((e, hv / rv))
    scalars, field = None, "none"
    if zero_mismatch == 0:
        mags = _solve_exponents([(e, abs(q)) for e, q in eqs], n)
        if mags is not None:
            bits = _solve_signs([(e, int(q < 0)) for e, q in eqs], n)
            if bits is not None:
                scalars = {m: ((-1) ** bits[m - 1] * mags[m], 0) for m in range(1, n + 1)}
                field = "Q"
            else:
                # c_m = i^(m-1) r_m: c^e = i^(sum e_m (m-1)) r^e
                twisted, ok = [], True
                for e, q in eqs:
                    s = sum(e[m] * (m - 1) for m in range(1, n + 1))
                    if s % 2:
                        ok = False
                        break
                    sign = -1 if (s // 2) % 2 else 1
                    twisted.append((e, int(q * sign < 0)))
                bits = _solve_signs(twisted, n) if ok else None
                if bits is not None:
                    scalars = {m: ((-1) ** bits[m - 1] * mags[m], m - 1) for m in range(1, n + 1)}
                    field = "Q(i)"
    if scalars is None:
        return CompareReport(False, {}, zero_mismatch + len(eqs), field, "no scalars in the per-cycle family")
    residual = 0
    for i, j, k, hv, rv in triples:
        lhs = _scalar_power(scalars, types[k])
        lhs = (lhs[0] * hv, lhs[1] * hv)
        vec = [types[i][m] + types[j][m] for m in range(n + 1)]
        rhs = _scalar_power(scalars, vec)
        rhs = (rhs[0] * rv, rhs[1] * rv)
        if lhs != rhs:
            residual += 1
    return CompareReport(residual == 0, scalars, residual, field)
