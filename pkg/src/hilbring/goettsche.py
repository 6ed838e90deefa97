"""Generating-function oracles for Betti numbers and Euler numbers of X^[n]."""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InvalidBetti


@dataclass
class BivariateSeries:
    """Truncated series sum c[n][d] t^d q^n with integer coefficients."""

    n_max: int
    coeffs: list = field(default_factory=list)

    def row(self, n):
        return self.coeffs[n]


def _mul(a, b, n_max):
    out = [dict() for _ in range(n_max + 1)]
    for n1, row1 in enumerate(a):
        for d1, c1 in row1.items():
            for n2 in range(n_max + 1 - n1):
                for d2, c2 in b[n2].items():
                    out[n1 + n2][d1 + d2] = out[n1 + n2].get(d1 + d2, 0) + c1 * c2
    return [{d: c for d, c in r.items() if c} for r in out]


def _binomial_factor(power, td, m, n_max, sign):
    """(1 + sign t^td q^m)^power for sign=+1, or (1 - t^td q^m)^(-power) for sign=-1."""
    out = [dict() for _ in range(n_max + 1)]
    out[0][0] = 1
    k = 1
    coef = 1
    while k * m <= n_max:
        if sign > 0:
            coef = coef * (power - k + 1) // k
        else:
            coef = coef * (power + k - 1) // k
        if coef == 0:
            break
        out[k * m][k * td] = out[k * m].get(k * td, 0) + coef
        k += 1
    return out


def poincare_series(betti, n_max: int) -> BivariateSeries:
    b = tuple(int(x) for x in betti)
    if len(b) != 5 or b[0] != 1 or b[4] != 1 or b[1] != b[3] or min(b) < 0:
        raise InvalidBetti(f"Betti numbers {betti} are not those of a closed connected four-manifold")
    series = [dict() for _ in range(n_max + 1)]
    series[0][0] = 1
    for m in range(1, n_max + 1):
        factors = [
            (b[1], 2 * m - 1, +1),
            (b[3], 2 * m + 1, +1),
            (b[0], 2 * m - 2, -1),
            (b[2], 2 * m, -1),
            (b[4], 2 * m + 2, -1),
        ]
        for power, td, sign in factors:
            if power:
                series = _mul(series, _binomial_factor(power, td, m, n_max, sign), n_max)
    return BivariateSeries(n_max, series)


def betti_table(betti, n_max: int) -> list:
    """Rows (n, d, b_d(X^[n])) sorted by (n, d), including zeros in 0..4n."""
    s = poincare_series(betti, n_max)
    rows = []
    for n in range(n_max + 1):
        for d in range(4 * n + 1):
            rows.append((n, d, s.coeffs[n].get(d, 0)))
    return rows


def euler_series(e: int, n_max: int) -> list:
    """Coefficients of prod_m (1 - q^m)^(-e)."""
    out = [0] * (n_max + 1)
    out[0] = 1
    for m in range(1, n_max + 1):
        # multiply by (1 - q^m)^(-e) = sum_k C(e+k-1, k) q^{mk}
        new = [0] * (n_max + 1)
        for k in range(0, n_max // m + 1):
            c = _gen_binom(e, k)
            for i in range(n_max + 1 - k * m):
                new[i + k * m] += c * out[i]
        out = new
    return out


def _gen_binom(e, k):
    """C(e+k-1, k) for any integer e."""
    num, den = 1, 1
    for j in range(k):
        num *= e + j
        den *= j + 1
    return num // den
