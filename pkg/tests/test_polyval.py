import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st
from sympy.polys.subresultants_qq_zz import sylvester

from crtspacing import arith, polyval as pv

X, T = sympy.symbols("x t")


def sym(coeffs):
    return sum(c * X**i for i, c in enumerate(coeffs))


def test_parse_and_eval():
    f = pv.IntPolynomial.parse("0,0,-2,0,1")
    assert f.coeffs == pv.ANOMALY and f.degree == 4
    assert f(3) == 81 - 18
    assert list(f.eval_mod(np.arange(7), 7)) == [f(x) % 7 for x in range(7)]
    assert f.derivative() == [0, -4, 0, 4]


@pytest.mark.parametrize("coeffs,count,generic", [
    ((0, 0, 1), 1, True),
    (pv.ANOMALY, 2, False),
    ((0, -3, 0, 1), 2, True),
    ((0, 1, 0, 0, 1), 3, True),
])
def test_critical_value_examples(coeffs, count, generic):
    r = pv.critical_values_distinct(coeffs)
    assert r.distinct_count == count and r.generic == generic


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=3, max_size=6), st.integers(-20, 20), st.integers(-50, 50))
def test_critical_values_translation_invariant(coeffs, dx, dc):
    if coeffs[-1] == 0:
        coeffs[-1] = 1
    f = pv.IntPolynomial(tuple(coeffs))
    base = pv.critical_values_distinct(f).distinct_count
    assert pv.critical_values_distinct(f.shifted(dx, dc)).distinct_count == base


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-6, 6), min_size=3, max_size=6))
def test_critical_values_match_sympy(coeffs):
    if coeffs[-1] == 0:
        coeffs[-1] = 1
    f = sym(coeffs)
    R = sympy.Poly(sympy.resultant(f - T, sympy.diff(f, X), X), T)
    sqf = sympy.Poly(sympy.quo(R, sympy.gcd(R, R.diff(T))), T)
    assert pv.critical_values_distinct(coeffs).distinct_count == sqf.degree()


def test_critical_values_mod_p_match_sympy():
    rng = random.Random(3)
    for _ in range(40):
        coeffs = [rng.randint(-4, 4) for _ in range(rng.randint(3, 5))] + [1]
        f = sym(coeffs)
        R = sympy.Poly(sympy.resultant(f - T, sympy.diff(f, X), X), T)
        for p in (7, 11, 13, 101):
            got = pv.critical_values_mod_p(coeffs, p)
            Rp = sympy.Poly(R.as_expr(), T, modulus=p)
            if Rp.degree() != R.degree() or any(Fraction(c).denominator % p == 0 for c in R.all_coeffs()):
                continue
            want = sympy.Poly(sympy.quo(Rp, sympy.gcd(Rp, Rp.diff(T))), T, modulus=p).degree()
            if got is not None:
                assert got == want


def test_critical_values_mod_p_examples():
    assert pv.critical_values_mod_p(pv.ANOMALY, 101) == 2
    assert pv.critical_values_mod_p((0, 1, 0, 0, 1), 100003) == 3


def test_resultant_and_interpolation_vs_sympy():
    rng = random.Random(7)
    for _ in range(30):
        a = [rng.randint(-9, 9) for _ in range(rng.randint(2, 6))] + [rng.randint(1, 5)]
        b = [rng.randint(-9, 9) for _ in range(rng.randint(1, 5))] + [rng.randint(1, 5)]
        assert pv.resultant(a, b) == sylvester(sym(a), sym(b), X).det()
    # product formula: Res(x^3, x^5 + 1) = 1^5 * (0^5 + 1)^3
    assert pv.resultant([0, 0, 0, 1], [1, 0, 0, 0, 0, 1]) == 1
    xs, ys = [0, 1, 2, 3], [1, 3, 11, 31]
    poly = pv.interpolate(xs, ys)
    assert all(sum(c * x**i for i, c in enumerate(poly)) == y for x, y in zip(xs, ys))


def test_c_n_and_derangements():
    assert pv.c_n(4) == Fraction(5, 8)
    for n in range(1, 9):
        brute = sum(all(p[i] != i for i in range(n)) for p in itertools.permutations(range(n)))
        assert pv.derangements(n) == brute
        assert pv.c_n(n) == 1 - Fraction(brute, math.factorial(n))
    target = 1 - sympy.exp(-1)
    prev = None
    for n in range(1, 16):
        diff = abs(sympy.Rational(pv.c_n(n).numerator, pv.c_n(n).denominator) - target)
        assert sympy.N(diff - sympy.Rational(1, math.factorial(n + 1)), 60) <= 0
        if prev is not None:
            assert sympy.N(diff - prev, 60) < 0
        prev = diff


def test_value_set_examples():
    assert pv.value_set_density((0, 1), 101) == (101, 1.0)
    assert set(np.flatnonzero(pv.value_set((0, 0, 1), 7))) == {0, 1, 2, 4}
    with pytest.raises(ValueError):
        pv.value_set_density((0, 0, 1), 15)


@pytest.mark.parametrize("p", [p for p in range(5, 400) if sympy.isprime(p) and p % 3 == 2])
def test_cube_map_bijective(p):
    assert pv.value_set_density((0, 0, 0, 1), p)[0] == p


def test_value_set_size_equals_p_iff_permutation():
    rng = random.Random(11)
    for _ in range(60):
        p = rng.choice([7, 11, 13, 17, 19, 23])
        coeffs = [rng.randint(0, p - 1) for _ in range(rng.randint(2, 5))] + [1]
        n, _ = pv.value_set_density(coeffs, p) if p > len(coeffs) - 1 else (None, None)
        if n is None:
            continue
        image = {sum(c * pow(x, i, p) for i, c in enumerate(coeffs)) % p for x in range(p)}
        assert n == len(image) and (n == p) == (len(image) == p)


def test_pair_count():
    mask = np.zeros(7, bool)
    mask[[1, 2, 4]] = True
    assert pv.pair_count(mask, 1) == 1
    assert pv.pair_count(mask, 3) == 1


def test_anomaly_paths_agree_exhaustively():
    for p in arith.primes_in_range(7, 500):
        r = pv.anomaly_check(p)
        assert r.n2_direct == r.n2_legendre, p


@pytest.mark.parametrize("p", [100003, 100019])
def test_anomaly_constants(p):
    r = pv.anomaly_check(p)
    want = Fraction(3, 32) if p % 4 == 1 else Fraction(3, 16)
    assert r.predicted == want
    assert abs(r.measured - float(want)) <= 10 / math.sqrt(p)


def test_anomaly_density():
    for p in (10007, 10009):
        n, dens = pv.value_set_density(pv.ANOMALY, p)
        assert abs(dens - 3 / 8) <= 5 / math.sqrt(p)


def test_s_p_counts():
    sp5 = pv.s_p_legendre_count(5)
    assert (sp5.direct, sp5.legendre) == (3, 3)
    sp = pv.s_p_legendre_count(101)
    assert sp.direct == sp.legendre == 39
    assert abs(sp.formula - sp.direct) <= 2
    for p in (10007, 10009):
        sp = pv.s_p_legendre_count(p)
        assert sp.direct == sp.legendre
        assert abs(sp.direct / p - 3 / 8) <= 5 / math.sqrt(p)
    for p in arith.primes_in_range(3, 300):
        sp = pv.s_p_legendre_count(p)
        assert sp.direct == sp.legendre


def test_parity_cover():
    assert pv.parity_cover_exists({0, 1, 2, 4}, {0, 4, 6}, 7) is None
    rng = random.Random(2)
    for _ in range(200):
        p = rng.choice([11, 13, 101])
        S = rng.sample(range(p), rng.randint(1, 5))
        h = rng.randrange(p)
        t = pv.parity_cover_exists(S, [h], p)
        assert t is not None and (t + h) % p in S
    for _ in range(200):
        p = rng.choice([5, 7, 11])
        S, H = rng.sample(range(p), rng.randint(1, p)), rng.sample(range(p), rng.randint(1, p))
        odd = [t for t in range(p) if sum((t + h) % p in S for h in H) % 2 == 1]
        got = pv.parity_cover_exists(S, H, p)
        assert got == (odd[0] if odd else None)
    with pytest.raises(ValueError):
        pv.parity_cover_exists([], [1], 7)
