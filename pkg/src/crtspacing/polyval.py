"""Value sets of integer polynomials modulo primes.

Includes exact critical-value counting over Q, the limiting densities c_n,
the x^4 - 2x^2 pair-count anomaly with an independent Legendre-symbol count,
and the parity covering check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import arith

ANOMALY = (0, 0, -2, 0, 1)  # x^4 - 2x^2, constant term first


# -- polynomials over Q (coefficient lists, constant term first) ----------------------

def _trim(a: list) -> list:
    while a and a[-1] == 0:
        a.pop()
    return a


def _deriv(a: Sequence) -> list:
    return _trim([i * c for i, c in enumerate(a)][1:])


def _divmod(a: list[Fraction], b: list[Fraction]) -> tuple[list[Fraction], list[Fraction]]:
    a = _trim(list(a))
    b = _trim(list(b))
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    quot = [Fraction(0)] * max(0, len(a) - len(b) + 1)
    while len(a) >= len(b):
        coef = a[-1] / b[-1]
        shift = len(a) - len(b)
        quot[shift] = coef
        for i, c in enumerate(b):
            a[i + shift] -= coef * c
        a = _trim(a)
    return quot, a


def poly_gcd(a: Sequence, b: Sequence) -> list[Fraction]:
    """Monic gcd over Q."""
    a = _trim([Fraction(x) for x in a])
    b = _trim([Fraction(x) for x in b])
    while b:
        a, b = b, _divmod(a, b)[1]
    if not a:
        return []
    return [c / a[-1] for c in a]


def degree(a: Sequence) -> int:
    return len(_trim(list(a))) - 1


def _det_bareiss(m: list[list[int]]) -> int:
    """Exact integer determinant by fraction-free elimination."""
    m = [row[:] for row in m]
    n = len(m)
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for r in range(k + 1, n):
                if m[r][k] != 0:
                    m[k], m[r] = m[r], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def resultant(a: Sequence[int], b: Sequence[int]) -> int:
    """Res(a, b) of integer polynomials via the Sylvester determinant."""
    a, b = _trim(list(a)), _trim(list(b))
    m, n = len(a) - 1, len(b) - 1
    if m < 0 or n < 0:
        return 0
    if m == 0:
        return a[0] ** n
    if n == 0:
        return b[0] ** m
    size = m + n
    rows = []
    for i in range(n):
        row = [0] * size
        for j, c in enumerate(reversed(a)):
            row[i + j] = c
        rows.append(row)
    for i in range(m):
        row = [0] * size
        for j, c in enumerate(reversed(b)):
            row[i + j] = c
        rows.append(row)
    return _det_bareiss(rows)


def interpolate(xs: Sequence[int], ys: Sequence[int]) -> list[Fraction]:
    """Coefficients (constant first) of the unique polynomial through the points."""
    n = len(xs)
    out = [Fraction(0)] * n
    for i in range(n):
        basis = [Fraction(1)]
        denom = 1
        for j in range(n):
            if j == i:
                continue
            basis = [Fraction(0)] + basis
            for t in range(len(basis) - 1):
                basis[t] -= xs[j] * basis[t + 1]
            denom *= xs[i] - xs[j]
        for t, c in enumerate(basis):
            out[t] += c * ys[i] / denom
    return _trim(out)


# -- integer polynomials ----------------------------------------------------------------

@dataclass(frozen=True)
class IntPolynomial:
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if len(self.coeffs) < 2 or self.coeffs[-1] == 0:
            raise ValueError("need degree >= 1 and a nonzero leading coefficient")

    @classmethod
    def parse(cls, text: str) -> "IntPolynomial":
        """'0,0,-2,0,1' -> x^4 - 2x^2 (constant term first)."""
        return cls(tuple(int(c) for c in text.split(",")))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def derivative(self) -> list[int]:
        return _deriv(self.coeffs)

    def __call__(self, x: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def eval_mod(self, y: np.ndarray, p: int) -> np.ndarray:
        acc = np.zeros_like(y, dtype=np.int64)
        for c in reversed(self.coeffs):
            acc = (acc * y + c % p) % p
        return acc

    def shifted(self, dx: int = 0, dc: int = 0) -> "IntPolynomial":
        """f(x + dx) + dc."""
        out = [0] * len(self.coeffs)
        for i, c in enumerate(self.coeffs):
            for j in range(i + 1):
                out[j] += c * math.comb(i, j) * dx ** (i - j)
        out[0] += dc
        return IntPolynomial(tuple(out))


def _poly(f) -> IntPolynomial:
    return f if isinstance(f, IntPolynomial) else IntPolynomial(tuple(f))


@dataclass(frozen=True)
class CriticalValueReport:
    distinct_count: int
    degree: int
    resultant: tuple[Fraction, ...]

    @property
    def generic(self) -> bool:
        return self.distinct_count == self.degree - 1


def critical_resultant(f) -> list[Fraction]:
    """R(t) = Res_x(f(x) - t, f'(x)), interpolated from n integer evaluations."""
    f = _poly(f)
    n = f.degree
    fp = f.derivative()
    if not fp:
        raise ValueError("derivative vanishes")
    ts = list(range(n))
    values = []
    for t in ts:
        shifted = list(f.coeffs)
        shifted[0] -= t
        values.append(resultant(shifted, fp))
    return interpolate(ts, values)


def critical_values_distinct(f) -> CriticalValueReport:
    """Number of distinct critical values f(xi), f'(xi) = 0, over C."""
    f = _poly(f)
    if f.degree < 2:
        raise ValueError("need degree >= 2")
    R = critical_resultant(f)
    if degree(R) != f.degree - 1:
        raise ArithmeticError("resultant has unexpected degree")
    g = poly_gcd(R, _deriv(R))
    return CriticalValueReport(degree(R) - degree(g), f.degree, tuple(R))


def critical_values_mod_p(f, p: int) -> int | None:
    """Distinct critical values over the algebraic closure of F_p.

    Counted as distinct roots of R(t) mod p; None when p divides a
    denominator or the leading coefficient of R (an exceptional prime).
    """
    f = _poly(f)
    R = critical_resultant(f)
    if any(c.denominator % p == 0 for c in R):
        return None
    Rp = [c.numerator * pow(c.denominator, -1, p) % p for c in R]
    if Rp[-1] == 0:
        return None
    return degree(Rp) - degree(_gcd_mod_p(Rp, _deriv_mod_p(Rp, p), p))


def _deriv_mod_p(a: list[int], p: int) -> list[int]:
    return _trim([i * c % p for i, c in enumerate(a)][1:])


def _gcd_mod_p(a: list[int], b: list[int], p: int) -> list[int]:
    a, b = _trim([x % p for x in a]), _trim([x % p for x in b])
    while b:
        inv = pow(b[-1], -1, p)
        while len(a) >= len(b) and a:
            coef = a[-1] * inv % p
            shift = len(a) - len(b)
            for i, c in enumerate(b):
                a[i + shift] = (a[i + shift] - coef * c) % p
            a = _trim(a)
        a, b = b, a
    return a


# -- densities ----------------------------------------------------------------------------

def c_n(n: int) -> Fraction:
    """1 - 1/2! + 1/3! - ... - (-1)^n / n!."""
    if n < 1:
        raise ValueError("n must be positive")
    return sum((Fraction((-1) ** (j + 1), math.factorial(j)) for j in range(1, n + 1)), Fraction(0))


def derangements(n: int) -> int:
    a, b = 1, 0  # D(0), D(1)
    if n == 0:
        return 1
    for i in range(2, n + 1):
        a, b = b, (i - 1) * (a + b)
    return b


def value_set(f, p: int) -> np.ndarray:
    """Boolean mask of {f(y) mod p}."""
    f = _poly(f)
    if p >= 2**31:
        raise ValueError("p too large for the int64 sieve")
    mask = np.zeros(p, dtype=bool)
    mask[f.eval_mod(np.arange(p, dtype=np.int64), p)] = True
    return mask


def value_set_density(f, p: int) -> tuple[int, float]:
    f = _poly(f)
    if not arith.is_prime(p):
        raise ValueError(f"{p} is not prime")
    if p <= f.degree:
        raise ValueError("need p > deg f")
    n = int(value_set(f, p).sum())
    return n, n / p


def pair_count(mask: np.ndarray, h: int = 1) -> int:
    """#{t : t and t + h both in the set}, wrapping mod len(mask)."""
    return int(np.count_nonzero(mask & np.roll(mask, -h)))


# -- the x^4 - 2x^2 anomaly ---------------------------------------------------------------

@dataclass(frozen=True)
class AnomalyResult:
    p: int
    n2_direct: int
    n2_legendre: int
    predicted: Fraction

    @property
    def measured(self) -> float:
        return self.n2_direct / self.p


def anomaly_n2_legendre(p: int) -> int:
    """#{a : a, a + 1 in S_p}, S_p = {(x^2 - 1)^2}, via Legendre symbols only.

    a and a + 1 are squares b^2, c^2 with c^2 - b^2 = 1; r = b + c runs over
    F_p^* with b = (r - 1/r)/2 and c = (r + 1/r)/2. Then
      b^2 in S_p  iff  (2r(r^2+2r-1) / p) or (-2r(r^2-2r-1) / p) is not -1,
      c^2 in S_p  iff  r = +-1 or (2r / p) or (-2r / p) is 1,
    and each a is hit once per choice of signs of b and c.
    """
    if p < 5 or not arith.is_prime(p):
        raise ValueError("need an odd prime p >= 5")
    r = np.arange(1, p, dtype=np.int64)
    two_r = 2 * r % p
    L = lambda v: arith.legendre_array(v % p, p)  # noqa: E731
    b_in = (L(two_r * ((r * r + 2 * r - 1) % p)) >= 0) | (L(-two_r * ((r * r - 2 * r - 1) % p)) >= 0)
    c_in = (L(two_r * ((r + 1) ** 2 % p)) >= 0) | (L(-two_r * ((r - 1) ** 2 % p)) >= 0)
    inv = arith.powmod_array(r, p - 2, p)
    half = (p + 1) // 2
    b = (r - inv) % p * half % p
    c = (r + inv) % p * half % p
    mult = np.where(b == 0, 1, 2) * np.where(c == 0, 1, 2)
    weights = (b_in & c_in) * (4 // mult)
    total = int(weights.sum())
    assert total % 4 == 0
    return total // 4


def anomaly_check(p: int) -> AnomalyResult:
    """N_2(1) for the image of x^4 - 2x^2 mod p, two ways, with the predicted density."""
    if p < 5 or not arith.is_prime(p):
        raise ValueError("need an odd prime p >= 5")
    direct = pair_count(value_set(ANOMALY, p), 1)
    predicted = Fraction(3, 32) if p % 4 == 1 else Fraction(3, 16)
    return AnomalyResult(p, direct, anomaly_n2_legendre(p), predicted)


@dataclass(frozen=True)
class SpCount:
    direct: int
    legendre: int
    formula: Fraction


def s_p_legendre_count(p: int) -> SpCount:
    """|S_p| for S_p = {(x^2 - 1)^2 mod p}, three ways.

    direct: enumeration. legendre: b^2 is in S_p iff 1 + b or 1 - b is a
    square (0 included), for b in 0..(p-1)/2. formula: the closed Legendre
    sum (1/2) sum_b (1 - (1 + (1+b / p))(1 + (1-b / p)) / 4), which is only
    within O(1) of |S_p|.
    """
    if p < 3 or not arith.is_prime(p):
        raise ValueError("need an odd prime")
    x = np.arange(p, dtype=np.int64)
    direct = int(np.unique((x * x - 1) % p * ((x * x - 1) % p) % p).size)
    b = np.arange((p + 1) // 2, dtype=np.int64)
    legendre = int(((arith.legendre_array(1 + b, p) >= 0) | (arith.legendre_array(1 - b, p) >= 0)).sum())
    lp = arith.legendre_array(1 + x, p).astype(np.int64)
    lm = arith.legendre_array(1 - x, p).astype(np.int64)
    formula = Fraction(int((4 - (1 + lp) * (1 + lm)).sum()), 8)
    return SpCount(direct, legendre, formula)


# -- parity covering ------------------------------------------------------------------------

def parity_cover_exists(S: Iterable[int], H: Iterable[int], p: int) -> int | None:
    """Some t with #{h in H : t + h in S} odd, or None."""
    S, H = sorted({s % p for s in S}), sorted({h % p for h in H})
    if not S or not H:
        raise ValueError("S and H must be nonempty")
    ind = np.zeros(p, dtype=np.int64)
    ind[S] = 1
    cover = np.zeros(p, dtype=np.int64)
    for h in H:
        cover += np.roll(ind, -h)
    odd = np.flatnonzero(cover % 2 == 1)
    return int(odd[0]) if len(odd) else None
