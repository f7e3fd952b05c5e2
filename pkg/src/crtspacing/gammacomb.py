"""Gcd structures of offset tuples and the counting bounds built on them.

A structure on k points 0..k-1 is a symmetric table of squarefree integers
g(i, j); for a tuple h with h_0 = 0 and a squarefree c it is
g(i, j) = gcd(c, h_j - h_i). Every prime p splits {0..k-1} into the classes
"p | g(i, j)", which is what makes the structures enumerable through set
partitions.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np
import sympy

from . import arith
from .kernels import BudgetExceeded

SCAN_BUDGET = 10_000_000


def _pairs(k: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(k) for j in range(i + 1, k)]


@dataclass(frozen=True)
class GammaStructure:
    k: int
    entries: tuple[int, ...]  # g(i, j) for i < j, row-major

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if len(self.entries) != self.k * (self.k - 1) // 2:
            raise ValueError("wrong number of entries")
        if any(g < 1 or not arith.is_squarefree(g) for g in self.entries):
            raise ValueError(f"entries must be positive squarefree integers: {self.entries}")

    @classmethod
    def from_matrix(cls, matrix: Sequence[Sequence[int]]) -> "GammaStructure":
        k = len(matrix)
        for i, j in _pairs(k):
            if matrix[i][j] != matrix[j][i]:
                raise ValueError("matrix is not symmetric")
        return cls(k, tuple(matrix[i][j] for i, j in _pairs(k)))

    def g(self, i: int, j: int) -> int:
        if i == j:
            raise ValueError("diagonal is unused")
        if i > j:
            i, j = j, i
        # row-major index of (i, j) among pairs i < j
        return self.entries[i * (2 * self.k - i - 1) // 2 + (j - i - 1)]

    def matrix(self) -> list[list[int]]:
        return [[0 if i == j else self.g(i, j) for j in range(self.k)] for i in range(self.k)]

    def compatible(self) -> bool:
        """gcd(g(i,j), g(j,l)) divides g(i,l) for all distinct i, j, l."""
        return all(
            self.g(i, l) % math.gcd(self.g(i, j), self.g(j, l)) == 0
            for i, j, l in itertools.permutations(range(self.k), 3)
        )

    def permuted(self, sigma: Sequence[int]) -> "GammaStructure":
        """g'(i, j) = g(sigma(i), sigma(j)); sigma is a permutation of 1..k-1."""
        full = (0, *sigma)
        if sorted(full) != list(range(self.k)):
            raise ValueError(f"not a permutation of 1..{self.k - 1}: {sigma}")
        return GammaStructure(self.k, tuple(self.g(full[i], full[j]) for i, j in _pairs(self.k)))


@dataclass(frozen=True)
class GammaDerived:
    gamma_j: tuple[int, ...]  # j = 1..k-1
    gamma: int
    conductor: int


def gamma_of_tuple(h: Sequence[int], c: int) -> GammaStructure:
    """Structure of the tuple (0, h_1, ..., h_{k-1}) relative to c."""
    if not arith.is_squarefree(c):
        raise ValueError(f"c = {c} is not squarefree")
    pts = (0, *h)
    if len(set(pts)) != len(pts):
        raise ValueError("tuple entries must be distinct")
    k = len(pts)
    out = GammaStructure(k, tuple(math.gcd(c, pts[j] - pts[i]) for i, j in _pairs(k)))
    assert out.compatible()
    return out


def derive(G: GammaStructure) -> GammaDerived:
    gj = tuple(arith.lcm(*(G.g(i, j) for i in range(j))) for j in range(1, G.k))
    gamma = math.prod(gj)
    return GammaDerived(gj, gamma, arith.radical(gamma))


# -- exhaustive tuple scans ------------------------------------------------------------

def _scan_codes(k: int, H: int, c: int, budget: int) -> tuple[np.ndarray, np.ndarray]:
    """Encode Gamma(h) of every distinct tuple in [0, H]^{k-1} (h_0 = 0).

    Returns (codes, counts) with codes in base c + 1 over the pair entries.
    """
    if H ** (k - 1) > budget:
        raise BudgetExceeded(f"{H}^{k - 1} tuples exceed the scan budget {budget}")
    pairs = _pairs(k)
    base = c + 1
    found: dict[int, int] = {}
    rest = [np.arange(1, H + 1, dtype=np.int64)] * (k - 2)
    for h1 in range(1, H + 1):
        if k == 2:
            grid = [np.array([h1], dtype=np.int64)]
        else:
            mesh = np.meshgrid(*rest, indexing="ij")
            grid = [np.full(mesh[0].size, h1, dtype=np.int64)] + [m.ravel() for m in mesh]
        pts = [np.zeros_like(grid[0])] + grid
        ok = np.ones(len(grid[0]), dtype=bool)
        code = np.zeros(len(grid[0]), dtype=np.int64)
        for i, j in pairs:
            diff = pts[j] - pts[i]
            ok &= diff != 0
            code = code * base + np.gcd(diff, c)
        codes, counts = np.unique(code[ok], return_counts=True)
        for a, b in zip(codes.tolist(), counts.tolist()):
            found[a] = found.get(a, 0) + b
    keys = np.array(sorted(found), dtype=np.int64)
    return keys, np.array([found[x] for x in keys.tolist()], dtype=np.int64)


def _decode(code: int, k: int, c: int) -> GammaStructure:
    n = k * (k - 1) // 2
    entries = []
    for _ in range(n):
        code, r = divmod(code, c + 1)
        entries.append(r)
    return GammaStructure(k, tuple(reversed(entries)))


def structure_counts(k: int, H: int, c: int, budget: int = SCAN_BUDGET) -> dict[GammaStructure, int]:
    """M_Gamma(H) for every structure realised by some tuple, gcds taken with c."""
    codes, counts = _scan_codes(k, H, c, budget)
    return {_decode(int(a), k, c): int(b) for a, b in zip(codes, counts)}


def m_gamma_structure(G: GammaStructure, H: int, c: int | None = None,
                      budget: int = SCAN_BUDGET) -> int:
    """Distinct tuples 0 = h_0, h_1..h_{k-1} in [0, H] whose structure is G.

    The gcds are taken with c, which defaults to the conductor of G.
    """
    if any(g > H for g in G.entries):
        return 0
    c = derive(G).conductor if c is None else c
    if any(c % g for g in G.entries):
        return 0
    return structure_counts(G.k, H, c, budget).get(G, 0)


def m_gamma(gamma: int, c: int, k: int, H: int, budget: int = SCAN_BUDGET) -> int:
    """Sum of M_Gamma(H) over structures with gcds taken with c and gamma(G) = gamma."""
    _check_weight(gamma, c, k)
    return sum(n for G, n in structure_counts(k, H, c, budget).items()
               if derive(G).gamma == gamma)


def weight_counts(k: int, H: int, c: int, budget: int = SCAN_BUDGET) -> dict[int, int]:
    """M_gamma(H) for every weight gamma that occurs."""
    out: dict[int, int] = {}
    for G, n in structure_counts(k, H, c, budget).items():
        g = derive(G).gamma
        out[g] = out.get(g, 0) + n
    return out


def _check_weight(gamma: int, c: int, k: int) -> None:
    if not arith.is_squarefree(c):
        raise ValueError(f"c = {c} is not squarefree")
    if c % arith.radical(gamma) or c ** (k - 1) % gamma:
        raise ValueError(f"need rad(gamma) | c and gamma | c^(k-1); got gamma={gamma}, c={c}")


def distinct_tuple_count(k: int, H: int) -> int:
    """Ordered tuples of k-1 distinct values in [1, H]."""
    return math.perm(H, k - 1)


# -- Stirling numbers and structure enumeration ---------------------------------------

@lru_cache(maxsize=None)
def stirling2(k: int, l: int) -> int:
    """Partitions of a k-set into l nonempty blocks (recurrence)."""
    if not 1 <= l <= k:
        if k == 0 and l == 0:
            return 1
        raise ValueError(f"stirling2 needs 1 <= l <= k, got ({k}, {l})")
    if l == 1 or l == k:
        return 1
    return l * stirling2(k - 1, l) + stirling2(k - 1, l - 1)


def stirling2_alternating(k: int, l: int) -> int:
    """The alternating-sum closed form, summed exactly."""
    total = sum((-1) ** (l - j) * math.comb(l - 1, j - 1) * j ** (k - 1) for j in range(1, l + 1))
    value = Fraction(total, math.factorial(l - 1))
    assert value.denominator == 1
    return int(value)


def set_partitions(items: Sequence[int]) -> Iterator[list[list[int]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def enumerate_structures(c: int, k: int) -> Iterator[GammaStructure]:
    """Every compatible structure whose entries divide the squarefree c."""
    primes = arith.factorize(c).primes
    parts = list(set_partitions(list(range(k))))
    for choice in itertools.product(parts, repeat=len(primes)):
        entries = []
        for i, j in _pairs(k):
            g = 1
            for p, partition in zip(primes, choice):
                if any(i in block and j in block for block in partition):
                    g *= p
            entries.append(g)
        yield GammaStructure(k, tuple(entries))


def count_structures(gamma: int, c: int, k: int, max_partitions: int = 10**6) -> int:
    """#{G with entries dividing c : gamma(G) = gamma}."""
    _check_weight(gamma, c, k)
    primes = arith.factorize(c).primes
    if stirling_bell(k) ** len(primes) > max_partitions:
        raise BudgetExceeded("too many structures to enumerate")
    return sum(1 for G in enumerate_structures(c, k) if derive(G).gamma == gamma)


def stirling_bell(k: int) -> int:
    return sum(stirling2(k, l) for l in range(1, k + 1))


def stirling_product_bound(gamma: int, k: int) -> int:
    """prod over p^e || gamma of S(k, k - e), zero when some e >= k."""
    out = 1
    for _, e in arith.factorize(gamma).factors:
        if e >= k:
            return 0
        out *= stirling2(k, k - e)
    return out


# -- bounds ---------------------------------------------------------------------------------

def prop_bound(G: GammaStructure, H: int, sigma: Sequence[int] | None = None) -> Fraction:
    """prod_i (H / gamma_i + 1) for the relabelled structure."""
    Gs = G if sigma is None else G.permuted(sigma)
    return math.prod((Fraction(H, g) + 1 for g in derive(Gs).gamma_j), start=Fraction(1))


def prop_bound_min(G: GammaStructure, H: int) -> Fraction:
    return min(prop_bound(G, H, s) for s in itertools.permutations(range(1, G.k)))


def cor_bound(G: GammaStructure, H: int) -> Fraction:
    """2^{k-1} H^{k-1} / prod_i min(gamma_i, H)."""
    denom = math.prod(min(g, H) for g in derive(G).gamma_j)
    return Fraction(2 ** (G.k - 1) * H ** (G.k - 1), denom)


def bound_rows(k: int, c: int, H: int, budget: int = SCAN_BUDGET) -> list[dict]:
    """Exact M_Gamma(H) against both bounds for every compatible structure."""
    counts = structure_counts(k, H, c, budget)
    rows = []
    for G in enumerate_structures(c, k):
        m = counts.get(G, 0)
        rows.append({
            "structure": G.entries, "gamma": derive(G).gamma, "H": H, "M_exact": m,
            "prop_bound_min_over_sigma": prop_bound_min(G, H), "cor_bound": cor_bound(G, H),
        })
    return rows


def bound_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gamma", "H", "M_exact", "prop_bound_min_over_sigma", "cor_bound"])
    for r in rows:
        w.writerow([r["gamma"], r["H"], r["M_exact"],
                    float(r["prop_bound_min_over_sigma"]), float(r["cor_bound"])])
    return buf.getvalue()


def tightness_experiment(H: int, triples: Sequence[tuple[int, int, int]]) -> list[dict]:
    """k = 3 structures with pairwise coprime g(0,1), g(0,2), g(1,2).

    Records the exact count next to cor_bound and the naive
    H^2 / (g01 g02 g12) guess; no inequality is asserted between them.
    """
    rows = []
    for g01, g02, g12 in triples:
        c = g01 * g02 * g12
        G = GammaStructure(3, (g01, g02, g12))
        m = m_gamma_structure(G, H, c)
        rows.append({
            "g01": g01, "g02": g02, "g12": g12, "H": H, "M_exact": m,
            "cor_bound": float(cor_bound(G, H)),
            "naive": H * H / (g01 * g02 * g12),
        })
    return rows


# -- exponents --------------------------------------------------------------------------

def tau_1(k: int) -> int:
    """floor(sqrt(2k + 1/4) - 1/2), computed exactly as floor((sqrt(8k+1) - 1) / 2)."""
    return (math.isqrt(8 * k + 1) - 1) // 2


def w_exponent(tau, k: int):
    return sympy.Rational(1, 2) * (tau - sympy.Rational(1, 2)) ** 2 + k - sympy.Rational(9, 8)


def v_exponent(tau: int, k: int):
    t1 = tau_1(k)
    if tau == 0:
        return sympy.Integer(k - 2)
    if tau == t1:
        return k + sympy.Rational(1, 2) - sympy.sqrt(2 * k + sympy.Rational(1, 4))
    if t1 + 1 <= tau <= k - 1:
        return sympy.Integer(k - tau)
    raise ValueError(f"v is defined for tau in {{0, {t1}}} or {t1 + 1}..{k - 1}")


def exponent_table(k: int) -> dict:
    """tau_1, w and v on the admissible tau, and lambda_k = min (k-1-v)/w, exactly."""
    if k < 2:
        raise ValueError("k must be at least 2")
    t1 = tau_1(k)
    taus = sorted({0, t1, *range(t1 + 1, k)})
    ratios = {}
    for tau in taus:
        ratios[tau] = sympy.nsimplify(sympy.simplify((k - 1 - v_exponent(tau, k)) / w_exponent(tau, k)))
    lam = ratios[taus[0]]
    for tau in taus[1:]:
        if sympy.simplify(ratios[tau] - lam).is_negative:
            lam = ratios[tau]
    return {
        "k": k, "tau_1": t1,
        "w": {tau: w_exponent(tau, k) for tau in taus},
        "v": {tau: v_exponent(tau, k) for tau in taus},
        "ratios": ratios, "lambda": sympy.simplify(lam),
    }
