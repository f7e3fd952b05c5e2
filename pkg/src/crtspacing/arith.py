"""Integer and modular arithmetic shared by the rest of the package.

Everything here is pure and works on Python ints, so intermediate products
never overflow. The numpy helpers at the bottom are the vectorised
counterparts used by the sieves.
"""

from __future__ import annotations

import math
import random
from functools import lru_cache, reduce
from typing import Iterable, NamedTuple, Sequence

import numpy as np

MAX_MODULUS = 2**63
TRIAL_LIMIT = 2**21

# Deterministic for n < 3.3e24, which covers every 64-bit input.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


class Factorization(NamedTuple):
    n: int
    factors: tuple[tuple[int, int], ...]

    @property
    def primes(self) -> list[int]:
        return [p for p, _ in self.factors]

    @property
    def squarefree(self) -> bool:
        return all(e == 1 for _, e in self.factors)

    def value(self) -> int:
        return math.prod(p**e for p, e in self.factors)


@lru_cache(maxsize=1)
def _spf_table() -> np.ndarray:
    """Smallest prime factor for every n < TRIAL_LIMIT."""
    spf = np.zeros(TRIAL_LIMIT, dtype=np.int32)
    for p in range(2, math.isqrt(TRIAL_LIMIT - 1) + 1):
        if spf[p] == 0:
            block = spf[p * p :: p]
            block[block == 0] = p
    idx = np.nonzero(spf == 0)[0]
    spf[idx] = idx
    return spf


@lru_cache(maxsize=1)
def _small_primes() -> list[int]:
    spf = _spf_table()
    idx = np.nonzero(spf == np.arange(TRIAL_LIMIT, dtype=np.int32))[0]
    return idx[idx >= 2].tolist()


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for all n < 2**64 (and far beyond)."""
    if n < 2:
        return False
    if n < TRIAL_LIMIT:
        return int(_spf_table()[n]) == n
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_brent(n: int, rng: random.Random) -> int:
    if n % 2 == 0:
        return 2
    while True:
        y, c, m = rng.randrange(1, n), rng.randrange(1, n), 128
        g = r = q = 1
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g


def factorize(n: int) -> Factorization:
    """Prime factorisation of 1 <= n <= 2**63.

    Small n use a smallest-prime-factor table; larger n are trial divided
    up to 2**21 and the cofactor is split by Miller-Rabin and Pollard rho.
    """
    if n < 1 or n > MAX_MODULUS:
        raise ValueError(f"factorize needs 1 <= n <= 2**63, got {n}")
    counts: dict[int, int] = {}
    m = n
    if m < TRIAL_LIMIT:
        spf = _spf_table()
        while m > 1:
            p = int(spf[m])
            counts[p] = counts.get(p, 0) + 1
            m //= p
        return Factorization(n, tuple(sorted(counts.items())))

    for p in _small_primes():
        if p * p > m:
            break
        while m % p == 0:
            counts[p] = counts.get(p, 0) + 1
            m //= p
    stack = [m] if m > 1 else []
    rng = random.Random(n)
    while stack:
        x = stack.pop()
        if is_prime(x):
            counts[x] = counts.get(x, 0) + 1
            continue
        r = math.isqrt(x)
        if r * r == x:
            stack += [r, r]
            continue
        d = _pollard_brent(x, rng)
        stack += [d, x // d]
    return Factorization(n, tuple(sorted(counts.items())))


def is_squarefree(n: int) -> bool:
    return factorize(n).squarefree


def radical(n: int) -> int:
    return math.prod(factorize(n).primes)


def euler_phi(n: int) -> int:
    return math.prod((p - 1) * p ** (e - 1) for p, e in factorize(n).factors)


def lcm(*values: int) -> int:
    return reduce(math.lcm, values, 1)


def divisors_squarefree(q: int) -> list[int]:
    """All divisors of a squarefree q, ascending."""
    f = factorize(q)
    if not f.squarefree:
        raise ValueError(f"{q} is not squarefree")
    divs = [1]
    for p in f.primes:
        divs += [d * p for d in divs]
    return sorted(divs)


def pairwise_coprime(moduli: Sequence[int]) -> bool:
    return all(
        math.gcd(a, b) == 1
        for i, a in enumerate(moduli)
        for b in moduli[i + 1 :]
    )


def crt_lift(pairs: Iterable[tuple[int, int]]) -> int:
    """Unique x in [0, prod m) with x = r (mod m) for every (r, m) pair.

    Raises ValueError when the moduli are not pairwise coprime.
    """
    x, M = 0, 1
    for r, m in pairs:
        if m < 1:
            raise ValueError(f"modulus must be positive, got {m}")
        if math.gcd(M, m) != 1:
            raise ValueError(f"moduli are not pairwise coprime (modulus {m})")
        # x' = x + M * t with M * t = r - x (mod m)
        t = (r - x) * pow(M, -1, m) % m
        x += M * t
        M *= m
    return x % M


def crt_coefficients(moduli: Sequence[int]) -> list[int]:
    """Idempotents e_i with e_i = 1 (mod m_i), 0 mod the others."""
    if not pairwise_coprime(moduli):
        raise ValueError("moduli are not pairwise coprime")
    M = math.prod(moduli)
    return [(M // m) * pow(M // m, -1, m) % M if m > 1 else 0 for m in moduli]


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a/p) for an odd prime p."""
    if p < 3 or p % 2 == 0 or not is_prime(p):
        raise ValueError(f"legendre needs an odd prime, got {p}")
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def primes_in_range(lo: int, hi: int) -> list[int]:
    """Primes p with lo <= p <= hi."""
    return [n for n in range(max(lo, 2), hi + 1) if is_prime(n)]


def primes_up_to(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.nonzero(sieve)[0].tolist()


# -- vectorised helpers -------------------------------------------------------

def powmod_array(base: np.ndarray, exponent: int, p: int) -> np.ndarray:
    """Elementwise base**exponent mod p; needs p < 2**31 so products fit int64."""
    if p >= 2**31:
        raise ValueError("powmod_array needs p < 2**31")
    result = np.ones_like(base, dtype=np.int64)
    b = np.asarray(base, dtype=np.int64) % p
    e = exponent
    while e:
        if e & 1:
            result = result * b % p
        b = b * b % p
        e >>= 1
    return result


def legendre_array(a: np.ndarray, p: int) -> np.ndarray:
    """Vectorised Legendre symbol via Euler's criterion, values in {-1, 0, 1}."""
    r = powmod_array(np.asarray(a, dtype=np.int64), (p - 1) // 2, p)
    out = np.where(r == 1, 1, -1).astype(np.int8)
    out[np.asarray(a, dtype=np.int64) % p == 0] = 0
    return out
