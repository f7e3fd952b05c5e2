import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from crtspacing import arith
from crtspacing.sets import (CapExceeded, FamilySpec, ResidueSet, bernoulli_mask, components, crt_compose,
                             gen_prime_set, generate, mix_seed, stats, uniform_draws)

ODD_PRIMES = [p for p in range(3, 1000) if sympy.isprime(p)]


def brute_squares(q: int) -> set[int]:
    """Squares of units mod q: the oracle for the squares family on odd squarefree q."""
    return {x * x % q for x in range(q) if math.gcd(x, q) == 1}


def test_prime_examples():
    assert set(gen_prime_set(FamilySpec.squares(), 7).elements) == {1, 2, 4}
    assert set(gen_prime_set(FamilySpec.units(), 5).elements) == {1, 2, 3, 4}
    assert set(gen_prime_set(FamilySpec.poly_image((0, 0, 1)), 7).elements) == {0, 1, 2, 4}
    with pytest.raises(ValueError):
        gen_prime_set(FamilySpec.squares(), 15)


def test_compose_examples():
    sq3, sq5 = gen_prime_set(FamilySpec.squares(), 3), gen_prime_set(FamilySpec.squares(), 5)
    assert set(crt_compose([sq3, sq5]).elements) == {1, 4}
    u = crt_compose([gen_prime_set(FamilySpec.units(), 3), gen_prime_set(FamilySpec.units(), 5)])
    assert u.count == 8 and set(u.elements) == {x for x in range(15) if math.gcd(x, 15) == 1}
    assert crt_compose([sq5]) == sq5


def test_stats_examples():
    r, s = stats(gen_prime_set(FamilySpec.squares(), 7))
    assert (r, s) == (3 / 7, 7 / 3)
    assert stats(generate(FamilySpec.units(), 101)) == (100 / 101, 101 / 100)
    assert stats(ResidueSet.from_mask(np.ones(12, bool)))[1] == 1
    with pytest.raises(ValueError):
        stats(ResidueSet.from_mask(np.zeros(5, bool)))


@pytest.mark.parametrize("p", ODD_PRIMES)
def test_dth_powers_2_equals_squares(p):
    assert generate(FamilySpec.dth_powers(2), p) == generate(FamilySpec.squares(), p)


@pytest.mark.parametrize("p", [7, 11, 13, 31, 101])
def test_prime_families_brute(p):
    for d in (3, 4, 5):
        want = {pow(x, d, p) for x in range(1, p)}
        s = gen_prime_set(FamilySpec.dth_powers(d), p)
        assert set(s.elements) == want and s.count == (p - 1) // math.gcd(d, p - 1)
    a, b = 2, 3
    if (4 * a**3 + 27 * b**2) % p:
        sq = {x * x % p for x in range(p)}
        want = {x for x in range(p) if (x**3 + a * x + b) % p in sq}
        assert set(gen_prime_set(FamilySpec.curve(a, b), p).elements) == want


def test_squares_cardinality_small_exhaustive():
    for q in range(3, 2500, 2):
        f = arith.factorize(q)
        if not f.squarefree:
            continue
        s = generate(FamilySpec.squares(), q)
        assert s.count == arith.euler_phi(q) // 2 ** len(f.primes)
        if q < 800:
            assert set(s.elements.tolist()) == brute_squares(q)


def test_squares_cardinality_up_to_1e6():
    rng = np.random.default_rng(5)
    tested = 0
    while tested < 40:
        q = int(rng.integers(3, 10**6)) | 1
        f = arith.factorize(q)
        if not f.squarefree:
            continue
        assert generate(FamilySpec.squares(), q).count == arith.euler_phi(q) // 2 ** len(f.primes)
        tested += 1


def test_multiplicative_membership():
    q = 3 * 5 * 7 * 11
    for fam in (FamilySpec.squares(), FamilySpec.units(), FamilySpec.dth_powers(3)):
        parts = components(fam, q)
        whole = generate(fam, q)
        mask = whole.mask
        for x in range(q):
            assert mask[x] == all(x % p.q in p for p in parts)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 300), st.integers(2, 300), st.integers(0, 2**32), st.floats(0.0, 1.0))
def test_compose_multiplicativity(q1, q2, seed, rho):
    if math.gcd(q1, q2) != 1:
        return
    rng = np.random.default_rng(seed)
    A = ResidueSet.from_mask(rng.random(q1) < rho)
    B = ResidueSet.from_mask(rng.random(q2) < rho)
    C = crt_compose([A, B])
    assert C.count == A.count * B.count
    assert C.q == q1 * q2
    els = C.elements
    assert all(int(x) % q1 in A and int(x) % q2 in B for x in els[:50])


def test_compose_rejects_non_coprime():
    with pytest.raises(ValueError):
        crt_compose([generate(FamilySpec.units(), 6), generate(FamilySpec.units(), 10)])


def test_cap_exceeded():
    with pytest.raises(CapExceeded):
        generate(FamilySpec.squares(), 3 * 5 * 7 * 11, cap=1000)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3000), st.integers(0, 2**32), st.floats(0.0, 0.5), st.sampled_from(["dense", "sparse"]))
def test_serialization_roundtrip(q, seed, rho, rep):
    mask = np.random.default_rng(seed).random(q) < rho
    s = ResidueSet.from_mask(mask, representation=rep)
    blob = s.to_bytes()
    back = ResidueSet.from_bytes(blob)
    assert back == s and back.representation == rep and back.to_bytes() == blob
    assert np.array_equal(back.mask, mask)


def test_serialization_header_and_errors(tmp_path):
    s = ResidueSet.from_members(15, [0, 5, 10])
    assert s.to_bytes()[:4] == b"CRSP"
    path = tmp_path / "s.crsp"
    s.save(path)
    assert ResidueSet.load(path) == s
    with pytest.raises(ValueError):
        ResidueSet.from_bytes(b"NOPE" + s.to_bytes()[4:])
    with pytest.raises(ValueError):
        ResidueSet.from_bytes(s.to_bytes()[:-1])


def test_family_spec_dict_roundtrip():
    for spec in (FamilySpec.units(), FamilySpec.squares(), FamilySpec.dth_powers(3),
                 FamilySpec.poly_image((0, 0, -2, 0, 1)), FamilySpec.curve(2, 3), FamilySpec.interval(5),
                 FamilySpec.multiples(2, 0.5, 9), FamilySpec.bernoulli(7.5, 11), FamilySpec.explicit((1, 4))):
        assert FamilySpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ValueError):
        FamilySpec.bernoulli(0.5, 1)


def test_seeded_draws_are_order_independent():
    labels = np.arange(1000, dtype=np.int64)
    u = uniform_draws(42, labels)
    perm = np.random.default_rng(0).permutation(1000)
    assert np.array_equal(uniform_draws(42, labels[perm]), u[perm])
    assert np.array_equal(bernoulli_mask(42, labels, 0.3), bernoulli_mask(42, labels, 0.3))
    assert not np.array_equal(uniform_draws(43, labels), u)
    assert mix_seed(1, 2) != mix_seed(2, 1)


def test_bernoulli_family_deterministic_and_density():
    a = generate(FamilySpec.bernoulli(10, 7), 200003)
    b = generate(FamilySpec.bernoulli(10, 7), 200003)
    assert a == b
    assert abs(a.count / 200003 - 0.1) < 0.005


def test_global_families():
    assert set(generate(FamilySpec.interval(4), 10).elements) == {1, 2, 3, 4}
    m = generate(FamilySpec.multiples(3, 1.0, 0), 20)
    assert set(m.elements) == {x % 20 for x in range(3, 21, 3)}
    assert generate(FamilySpec.units(), 30).count == 8
    assert generate(FamilySpec.explicit((0, 5, 10)), 15).count == 3


def test_density_exact():
    s = gen_prime_set(FamilySpec.squares(), 7)
    assert s.density == Fraction(3, 7)
