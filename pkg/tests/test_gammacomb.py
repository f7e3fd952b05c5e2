import itertools
import math
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, strategies as st

from crtspacing import gammacomb as gc
from crtspacing.kernels import BudgetExceeded


def brute_structure_counts(k: int, H: int, c: int) -> dict[tuple[int, ...], int]:
    out: dict[tuple[int, ...], int] = {}
    for h in itertools.product(range(1, H + 1), repeat=k - 1):
        pts = (0, *h)
        if len(set(pts)) != k:
            continue
        key = tuple(math.gcd(c, pts[j] - pts[i]) for i in range(k) for j in range(i + 1, k))
        out[key] = out.get(key, 0) + 1
    return out


def test_gamma_of_tuple_examples():
    assert gc.gamma_of_tuple((1, 2), 1).entries == (1, 1, 1)
    G = gc.gamma_of_tuple((2, 6), 6)
    assert (G.g(0, 1), G.g(0, 2), G.g(1, 2)) == (2, 6, 2)
    G2 = gc.gamma_of_tuple((3, 5), 15)
    assert (G2.g(0, 1), G2.g(0, 2), G2.g(1, 2)) == (3, 5, 1)
    with pytest.raises(ValueError):
        gc.gamma_of_tuple((1, 2), 12)
    with pytest.raises(ValueError):
        gc.gamma_of_tuple((2, 2), 6)


def test_derive_examples():
    d = gc.derive(gc.GammaStructure(3, (1, 1, 1)))
    assert (d.gamma, d.conductor) == (1, 1)
    d = gc.derive(gc.gamma_of_tuple((2, 6), 6))
    assert d.gamma_j == (2, 6) and d.gamma == 12 and d.conductor == 6


def test_structure_validation_and_matrix():
    with pytest.raises(ValueError):
        gc.GammaStructure(3, (1, 2))
    with pytest.raises(ValueError):
        gc.GammaStructure(2, (4,))
    G = gc.GammaStructure(3, (2, 6, 3))
    assert gc.GammaStructure.from_matrix(G.matrix()) == G
    assert not gc.GammaStructure(3, (2, 2, 1)).compatible()
    assert G.permuted((2, 1)).entries == (6, 2, 3)


def test_m_gamma_structure_examples():
    assert gc.m_gamma_structure(gc.GammaStructure(2, (2,)), 10, 2) == 5
    assert gc.m_gamma_structure(gc.GammaStructure(2, (1,)), 10, 2) == 5
    assert gc.m_gamma_structure(gc.GammaStructure(2, (30,)), 20) == 0
    assert gc.m_gamma_structure(gc.GammaStructure(3, (7, 1, 1)), 6) == 0


def test_m_gamma_examples():
    H = 6
    assert gc.m_gamma(1, 1, 3, H) == gc.distinct_tuple_count(3, H) == 30
    brute = brute_structure_counts(3, H, 2)
    want = sum(n for key, n in brute.items()
               if gc.derive(gc.GammaStructure(3, key)).gamma == 2)
    assert gc.m_gamma(2, 2, 3, H) == want
    with pytest.raises(ValueError):
        gc.m_gamma(3, 2, 3, H)
    with pytest.raises(ValueError):
        gc.m_gamma(8, 2, 3, H)


@pytest.mark.parametrize("k,H,c", [(2, 25, 6), (3, 20, 30), (3, 15, 2), (4, 9, 6)])
def test_scan_matches_brute(k, H, c):
    got = {G.entries: n for G, n in gc.structure_counts(k, H, c).items()}
    assert got == brute_structure_counts(k, H, c)


def test_scan_budget():
    with pytest.raises(BudgetExceeded):
        gc.structure_counts(4, 300, 6, budget=10**6)


@pytest.mark.parametrize("k,H,c", [(2, 60, 30), (3, 60, 30), (3, 60, 6), (4, 24, 30), (4, 60, 6)])
def test_bounds_hold_for_all_permutations(k, H, c):
    counts = gc.structure_counts(k, H, c)
    for G in gc.enumerate_structures(c, k):
        m = counts.get(G, 0)
        for sigma in itertools.permutations(range(1, k)):
            assert m <= gc.prop_bound(G, H, sigma)
        assert m <= gc.cor_bound(G, H)
    assert sum(counts.values()) == gc.distinct_tuple_count(k, H)


@pytest.mark.parametrize("k,c", [(2, 30), (3, 30), (4, 6), (3, 210)])
def test_enumerated_structures_are_compatible_and_cover_scan(k, c):
    structures = set(gc.enumerate_structures(c, k))
    assert all(G.compatible() for G in structures)
    assert set(gc.structure_counts(k, 3 * c, c)) <= structures


@given(st.lists(st.integers(1, 500), min_size=1, max_size=4, unique=True),
       st.sampled_from([1, 2, 6, 30, 210, 2310]))
def test_gamma_of_tuple_always_compatible(h, c):
    G = gc.gamma_of_tuple(tuple(h), c)
    assert G.compatible()
    assert all(c % g == 0 for g in G.entries)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_gamma_permutation_invariance(k):
    for G in gc.enumerate_structures(30, k):
        g = gc.derive(G).gamma
        for sigma in itertools.permutations(range(1, k)):
            assert gc.derive(G.permuted(sigma)).gamma == g


def test_stirling():
    for k in range(1, 13):
        for l in range(1, k + 1):
            s = gc.stirling2(k, l)
            assert s == gc.stirling2_alternating(k, l) == sympy.functions.combinatorial.numbers.stirling(k, l)
            if 1 < l < k:
                assert s == l * gc.stirling2(k - 1, l) + gc.stirling2(k - 1, l - 1)
    assert gc.stirling2(4, 2) == 7
    assert gc.stirling_bell(4) == 15


def test_set_partitions_count():
    for n in range(0, 7):
        assert sum(1 for _ in gc.set_partitions(list(range(n)))) == sympy.bell(n)


def test_count_structures_examples():
    assert gc.count_structures(1, 6, 3) == 1
    assert gc.count_structures(2, 2, 3) == 3 == gc.stirling2(3, 2)
    assert gc.count_structures(4, 2, 3) == 1 == gc.stirling2(3, 1)
    for c, k in [(2, 2), (2, 3), (2, 4), (6, 2), (6, 3), (6, 4), (30, 2), (30, 3)]:
        weights = {gc.derive(G).gamma for G in gc.enumerate_structures(c, k)}
        for g in weights:
            assert gc.count_structures(g, c, k) <= gc.stirling_product_bound(g, k)


def test_bound_rows_and_csv():
    rows = gc.bound_rows(2, 6, 10)
    assert {r["structure"] for r in rows} == {(1,), (2,), (3,), (6,)}
    text = gc.bound_csv(rows)
    assert text.splitlines()[0] == "gamma,H,M_exact,prop_bound_min_over_sigma,cor_bound"
    by = {r["structure"]: r for r in rows}
    assert by[(2,)]["M_exact"] == 4 and by[(6,)]["M_exact"] == 1
    assert by[(2,)]["prop_bound_min_over_sigma"] == Fraction(6)


def test_tightness_experiment_records_ratios():
    rows = gc.tightness_experiment(60, [(2, 3, 5)])
    r = rows[0]
    brute = brute_structure_counts(3, 60, 30)[(2, 3, 5)]
    assert r["M_exact"] == brute and r["naive"] == pytest.approx(120.0)


def test_tau_1_definition():
    for k in range(2, 13):
        exact = sympy.floor(sympy.sqrt(2 * k + sympy.Rational(1, 4)) - sympy.Rational(1, 2))
        assert gc.tau_1(k) == exact


def test_exponents():
    lam2 = gc.exponent_table(2)["lambda"]
    assert sympy.simplify(lam2 - (sympy.sqrt(17) - 3) / 2) == 0
    assert abs(float(lam2) - 0.56155) < 1e-5
    assert gc.exponent_table(3)["lambda"] == sympy.Rational(1, 3)
    for k in range(4, 11):
        assert gc.exponent_table(k)["lambda"] == sympy.Rational(1, k - 1)
