"""Independent oracles, fixed before the engines were compared against them.

chi_{-y} genus of X^[n] from the product formula
    sum_n chi_{-y}(X^[n]) q^n = exp(sum_m q^m chi_{-y^m}(X) / (m (1 - (y q)^m)))
against the Hirzebruch genus with characteristic series x (1 - y e^-x) / (1 - e^-x),
evaluated at fixed rational y.  Both sides are polynomials of degree <= dim in y,
so agreement at dim + 1 values of y is agreement as polynomials.
"""
from fractions import Fraction
from math import comb, factorial


def _series_log(a, d):
    """log of a power series with a[0] = 1, truncated at degree d."""
    out = [Fraction(0)] * (d + 1)
    for k in range(1, d + 1):
        acc = k * a[k]
        for j in range(1, k):
            acc -= j * out[j] * a[k - j]
        out[k] = acc / k
    return out


def _series_exp(a, d):
    out = [Fraction(0)] * (d + 1)
    out[0] = Fraction(1)
    for k in range(1, d + 1):
        out[k] = sum(j * a[j] * out[k - j] for j in range(1, k + 1)) / k
    return out


def _char_series(yv, d):
    """Coefficients of x (1 - y e^-x) / (1 - e^-x)."""
    # x / (1 - e^-x) = sum B_k^+ x^k / k!
    bern = [Fraction(1)]
    for m in range(1, d + 1):
        bern.append(-sum(comb(m + 1, j) * bern[j] for j in range(m)) / (m + 1))
    bplus = [b if k != 1 else -b for k, b in enumerate(bern)]
    todd = [bplus[k] / factorial(k) for k in range(d + 1)]
    factor = [1 - Fraction(yv)] + [Fraction(yv) * (-1) ** (k + 1) / factorial(k) for k in range(1, d + 1)]
    return [sum(todd[i] * factor[k - i] for i in range(k + 1)) for k in range(d + 1)]


def _poly_mul(a, b, d):
    out = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            k = tuple(x + z for x, z in zip(ka, kb))
            if sum((i + 1) * e for i, e in enumerate(k)) <= d:
                out[k] = out.get(k, 0) + va * vb
    return out


def genus_polynomial(yv, d):
    """chi_{-y} of a d-fold as {((k, e), ...): Fraction} over Chern monomials."""
    Q = _char_series(yv, d)
    q0 = Q[0]
    a = _series_log([x / q0 for x in Q], d)
    zero = tuple([0] * d)

    def var(i):
        k = [0] * d
        k[i - 1] = 1
        return tuple(k)

    # power sums of Chern roots via Newton
    e = [{zero: Fraction(1)}] + [{var(i): Fraction(1)} for i in range(1, d + 1)]
    p = [dict() for _ in range(d + 1)]
    for k in range(1, d + 1):
        acc = {m: c * (-1) ** (k - 1) * k for m, c in e[k].items()}
        for i in range(1, k):
            for m, c in _poly_mul(e[k - i], p[i], d).items():
                acc[m] = acc.get(m, 0) + c * (-1) ** (k - 1 + i)
        p[k] = acc
    s = {}
    for k in range(1, d + 1):
        for m, c in p[k].items():
            s[m] = s.get(m, 0) + a[k] * c
    # exp(s), s has no constant term
    total = {zero: Fraction(1)}
    term = {zero: Fraction(1)}
    for j in range(1, d + 1):
        term = {m: c / j for m, c in _poly_mul(term, s, d).items()}
        for m, c in term.items():
            total[m] = total.get(m, 0) + c
    out = {}
    for m, c in total.items():
        if sum((i + 1) * x for i, x in enumerate(m)) == d and c:
            out[tuple((i + 1, x) for i, x in enumerate(m) if x)] = c * q0 ** d
    return out


def chi_y_surface(c1sq, c2, yv):
    chi0 = Fraction(c1sq + c2, 12)
    chi1 = Fraction(c1sq - 5 * c2, 6)
    return chi0 - yv * chi1 + yv ** 2 * chi0


def chi_y_hilbert(c1sq, c2, n, yv):
    """chi_{-y}(X^[n]) at y = yv."""
    yv = Fraction(yv)
    expo = [Fraction(0)] * (n + 1)
    for m in range(1, n + 1):
        base = chi_y_surface(c1sq, c2, yv ** m) / m
        j = 0
        while m * (j + 1) <= n:
            expo[m * (j + 1)] += base * (yv ** m) ** j
            j += 1
    return _series_exp(expo, n)[n]


def euler_hilbert(e, n):
    """Coefficient of q^n in prod_m (1 - q^m)^(-e), by partition counting."""
    out = [Fraction(0)] * (n + 1)
    out[0] = Fraction(1)
    for m in range(1, n + 1):
        log_term = [Fraction(0)] * (n + 1)
        for j in range(1, n // m + 1):
            log_term[m * j] = Fraction(e, j)
        factor = _series_exp(log_term, n)
        out = [sum(out[i] * factor[k - i] for i in range(k + 1)) for k in range(n + 1)]
    return out[n]


def genus_from_numbers(numbers, d, yv):
    return sum(c * numbers[key] for key, c in genus_polynomial(yv, d).items())


def y_values(d):
    return [Fraction(v) for v in (0, -1, 2, 3, -2, 5, Fraction(1, 2), 7, -3)][: d + 1]
