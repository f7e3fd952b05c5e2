"""Gap statistics, tuple counts N_k, their deviations, and k-level correlations.

Functions taking ``target`` accept either one materialised
:class:`~crtspacing.sets.ResidueSet` or a list of sets with pairwise coprime
moduli. A list is treated as its CRT product and is never materialised:
tuple counts multiply across the components.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from . import arith, kernels
from .kernels import BudgetExceeded
from .sets import ResidueSet

Target = Union[ResidueSet, Sequence[ResidueSet]]

LATTICE_BUDGET = 2_000_000


@dataclass(frozen=True)
class OffsetTuple:
    """Offsets 0 < h_1 < ... < h_{k-1}; h_0 = 0 is implicit."""

    offsets: tuple[int, ...]

    def __post_init__(self):
        prev = 0
        for h in self.offsets:
            if h <= prev:
                raise ValueError(f"offsets must be strictly increasing and positive: {self.offsets}")
            prev = h

    @property
    def k(self) -> int:
        return len(self.offsets) + 1

    def augmented(self) -> tuple[int, ...]:
        return (0, *self.offsets)


@dataclass(frozen=True)
class CorrelationBox:
    """Region {0 < x_i - x_{i-1} <= theta * b_i}."""

    bounds: tuple[float, ...]
    theta: float = 1.0

    def __post_init__(self):
        if not self.bounds or any(b <= 0 for b in self.bounds) or self.theta <= 0:
            raise ValueError("box bounds and theta must be positive")

    @property
    def k(self) -> int:
        return len(self.bounds) + 1

    @property
    def vol(self) -> float:
        return math.prod(self.bounds) * self.theta ** len(self.bounds)

    def lattice_bounds(self, q: int, count: int) -> list[int]:
        """floor(theta * b_i * s_q), with s_q = q / count kept exact."""
        s = Fraction(q, count)
        theta = _decimal(self.theta)
        return [math.floor(theta * _decimal(b) * s) for b in self.bounds]


def _decimal(x: float) -> Fraction:
    """The value the user typed: 1.2 means 6/5, not the binary float below it."""
    return Fraction(repr(float(x))) if isinstance(x, float) else Fraction(x)


@dataclass
class GapProfile:
    elements: np.ndarray
    raw_gaps: np.ndarray
    q: int

    @property
    def m(self) -> int:
        return len(self.elements)

    @property
    def s(self) -> Fraction:
        return Fraction(self.q, self.m)

    @property
    def normalized(self) -> np.ndarray:
        return self.raw_gaps * (self.m / self.q)


@dataclass
class CorrelationReport:
    k: int
    bounds: tuple[float, ...]
    theta: float
    lattice_bounds: list[int]
    lattice_points: int
    tuple_sum: int
    r_k: float
    vol: float
    method: str
    kernel: str
    count: int = 0
    q: int = 0

    @property
    def ratio(self) -> float:
        return self.r_k / self.vol

    def to_dict(self) -> dict:
        return {
            "k": self.k, "box": list(self.bounds), "theta": self.theta,
            "lattice_bounds": self.lattice_bounds, "lattice_points": self.lattice_points,
            "tuple_sum": self.tuple_sum, "R_k": self.r_k, "vol": self.vol,
            "ratio": self.ratio, "method": self.method, "kernel": self.kernel,
            "count": self.count, "q": self.q,
        }


# -- helpers ----------------------------------------------------------------------------

def _parts(target: Target) -> list[ResidueSet]:
    parts = [target] if isinstance(target, ResidueSet) else list(target)
    if not parts:
        raise ValueError("empty component list")
    if len(parts) > 1 and not arith.pairwise_coprime([p.q for p in parts]):
        raise ValueError("component moduli are not pairwise coprime")
    return parts


def modulus(target: Target) -> int:
    return math.prod(p.q for p in _parts(target))


def cardinality(target: Target) -> int:
    return math.prod(p.count for p in _parts(target))


def _offsets(h) -> tuple[int, ...]:
    return tuple(h.offsets) if isinstance(h, OffsetTuple) else tuple(int(x) for x in h)


# -- gaps ----------------------------------------------------------------------------------

def gaps(s: ResidueSet) -> GapProfile:
    """Consecutive gaps with wraparound; the last gap crosses q."""
    if s.count < 2:
        raise ValueError("gaps need at least two elements")
    x = s.elements
    raw = np.empty(len(x), dtype=np.int64)
    raw[:-1] = np.diff(x)
    raw[-1] = x[0] + s.q - x[-1]
    return GapProfile(x, raw, s.q)


def _raw_threshold(profile: GapProfile, t: float) -> int:
    # Delta > t  <=>  raw > t * q / m  <=>  raw > floor(t * q / m) for integer raw
    return math.floor(_decimal(t) * profile.q / profile.m)


def prob_tail(profile: GapProfile, thresholds: Sequence[float]) -> float:
    """Proportion of j with Delta_{j+i} > t_i for i = 1..k (indices mod m)."""
    if len(thresholds) > profile.m:
        raise ValueError("more thresholds than gaps")
    ok = np.ones(profile.m, dtype=bool)
    for i, t in enumerate(thresholds, start=1):
        ok &= np.roll(profile.raw_gaps, -i) > _raw_threshold(profile, t)
    return int(ok.sum()) / profile.m


def ks_exp_distance(profile: GapProfile) -> float:
    """sup_t |F_emp(t) - (1 - e^{-t})| for the normalised gaps."""
    values, counts = np.unique(profile.raw_gaps, return_counts=True)
    t = values * (profile.m / profile.q)
    after = np.cumsum(counts) / profile.m
    before = after - counts / profile.m
    G = -np.expm1(-t)
    return float(max(np.max(np.abs(after - G)), np.max(np.abs(G - before))))


def gap_value_histogram(s: ResidueSet, d_max: int) -> np.ndarray:
    """Proportion of raw gaps equal to d, for d = 1..d_max (index d - 1)."""
    raw = gaps(s).raw_gaps
    hist = np.bincount(raw[raw <= d_max], minlength=d_max + 1)[1:]
    return hist / len(raw)


def tail_table(profile: GapProfile, ts: Iterable[float]) -> list[tuple[float, float, float]]:
    return [(t, prob_tail(profile, [t]), math.exp(-t)) for t in ts]


def tail_csv(profile: GapProfile, ts: Iterable[float]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "empirical_tail", "exp_tail"])
    for row in tail_table(profile, ts):
        w.writerow([repr(v) for v in row])
    return buf.getvalue()


# -- tuple counts -------------------------------------------------------------------------

def count_tuples(s: ResidueSet, h) -> int:
    """N_k(h) = #{t mod q : t + h_i in the set for all i, h_0 = 0}."""
    shifts = _offsets(h)
    if not shifts:
        return s.count
    if s.is_dense:
        return kernels.count_popcount(s, shifts)
    return kernels.count_membership(s, shifts)


def count_tuples_crt(components: Sequence[ResidueSet], h) -> int:
    """N_k(h) on the CRT product, as the product of component counts."""
    parts = _parts(components)
    shifts = _offsets(h)
    return math.prod(count_tuples(p, [x % p.q for x in shifts]) for p in parts)


def count_tuples_any(target: Target, h) -> int:
    parts = _parts(target)
    if len(parts) == 1:
        return count_tuples(parts[0], h)
    return count_tuples_crt(parts, h)


def epsilon_exact(target: Target, h) -> Fraction:
    q, n = modulus(target), cardinality(target)
    if n == 0:
        raise ValueError("epsilon of an empty set is undefined")
    k = len(_offsets(h)) + 1
    return Fraction(count_tuples_any(target, h) * q ** (k - 1), n**k) - 1


def epsilon_k(target: Target, h) -> float:
    """N_k / (r^{k-1} |set|) - 1."""
    return float(epsilon_exact(target, h))


def e_k(components: Sequence[ResidueSet], h, d: int) -> float:
    """Product of epsilon_k(h, Omega_p) over the prime components p | d."""
    return float(e_k_exact(components, h, d))


def e_k_exact(components: Sequence[ResidueSet], h, d: int) -> Fraction:
    parts = _parts(components)
    q = math.prod(p.q for p in parts)
    if q % d:
        raise ValueError(f"{d} does not divide {q}")
    chosen = [p for p in parts if d % p.q == 0]
    if math.prod(p.q for p in chosen) != d:
        raise ValueError(f"{d} is not a product of component moduli")
    out = Fraction(1)
    for p in chosen:
        out *= epsilon_exact(p, [x % p.q for x in _offsets(h)])
    return out


def n2_profile(s: ResidueSet, H: int, method: str = "auto") -> tuple[np.ndarray, str]:
    """N_2(h) for h = 0..H and the kernel used."""
    if method == "auto":
        popcount_cost = H * (s.q / 64)
        diff_cost = s.count * (s.count * H / s.q + 1)
        method = "popcount" if popcount_cost < diff_cost else "difference"
    if method == "popcount":
        return kernels.n2_profile_popcount(s, H), method
    if method == "difference":
        return kernels.n2_profile_difference(s, H), method
    raise ValueError(f"unknown kernel {method!r}")


# -- correlations ---------------------------------------------------------------------------

def _lattice_points(bounds: Sequence[int]):
    """Offset tuples with 0 < h_i - h_{i-1} <= bounds[i-1]."""
    for steps in itertools.product(*(range(1, b + 1) for b in bounds)):
        yield tuple(itertools.accumulate(steps))


def _component_profile(p: ResidueSet, H: int, method: str) -> tuple[np.ndarray, str]:
    # N_2 only depends on h mod q, so one period is enough
    top = min(H, p.q)
    prof, used = n2_profile(p, top, method)
    if H > top:
        prof = prof[np.arange(H + 1) % p.q]
    return prof, used


def tuple_sum(target: Target, bounds: Sequence[int], method: str = "auto",
              budget: int = LATTICE_BUDGET) -> tuple[int, str, str]:
    """Exact sum of N_k(h) over the lattice box, with (method, kernel) used."""
    parts = _parts(target)
    k = len(bounds) + 1
    if any(b < 1 for b in bounds):
        return 0, "crt-multiplicative" if len(parts) > 1 else "direct", "empty"
    if len(parts) == 1:
        s = parts[0]
        kernel = method
        if method == "auto":
            kernel = "popcount" if (s.is_dense and k == 2) else "difference"
        if kernel == "difference":
            return kernels.chain_sum(s, bounds), "direct", "difference"
        if kernel == "popcount":
            if k == 2:
                prof, _ = n2_profile(s, bounds[0], "popcount")
                return int(prof[1:].sum()), "direct", "popcount"
            _check_budget(bounds, budget)
            pb = kernels.PackedBits(s, sum(bounds))
            total = sum(pb.count_and((0, *h)) for h in _lattice_points(bounds))
            return total, "direct", "popcount"
        if kernel == "enumeration":
            _check_budget(bounds, budget)
            return sum(count_tuples(s, h) for h in _lattice_points(bounds)), "direct", kernel
        raise ValueError(f"unknown kernel {method!r}")

    if k == 2:
        H = bounds[0]
        profiles = [_component_profile(p, H, "auto" if method == "auto" else method)[0][1:]
                    for p in parts]
        big = math.prod(p.count for p in parts) * H >= 2**62
        acc = np.ones(H, dtype=object if big else np.int64)
        for prof in profiles:
            acc = acc * (prof.astype(object) if big else prof)
        return int(acc.sum()), "crt-multiplicative", "profile"
    _check_budget(bounds, budget)
    cache: list[dict] = [{} for _ in parts]
    total = 0
    for h in _lattice_points(bounds):
        prod = 1
        for p, memo in zip(parts, cache):
            key = tuple(x % p.q for x in h)
            if key not in memo:
                memo[key] = count_tuples(p, key)
            prod *= memo[key]
            if prod == 0:
                break
        total += prod
    return total, "crt-multiplicative", "enumeration"


def _check_budget(bounds: Sequence[int], budget: int) -> None:
    n = math.prod(bounds)
    if n > budget:
        raise BudgetExceeded(f"{n} lattice points exceed the enumeration budget {budget}")


def correlation(target: Target, box: CorrelationBox, method: str = "auto",
                budget: int = LATTICE_BUDGET) -> CorrelationReport:
    """R_k(theta X) = (1/|set|) * sum of N_k(h) over h in theta * s_q * X."""
    q, n = modulus(target), cardinality(target)
    if n == 0:
        bounds = [0] * len(box.bounds)
        total, used, kernel = 0, "direct", "empty"
    else:
        bounds = box.lattice_bounds(q, n)
        total, used, kernel = tuple_sum(target, bounds, method, budget)
    r = total / n if n else 0.0
    return CorrelationReport(
        k=box.k, bounds=tuple(box.bounds), theta=box.theta, lattice_bounds=bounds,
        lattice_points=math.prod(bounds) if all(b > 0 for b in bounds) else 0,
        tuple_sum=total, r_k=r, vol=box.vol, method=used, kernel=kernel, count=n, q=q,
    )


def strong_poisson_stat(target: Target, box: CorrelationBox,
                        budget: int = LATTICE_BUDGET) -> float:
    """Mean of epsilon_k(h)^2 over the lattice points of theta * s_q * X."""
    parts = _parts(target)
    q, n = modulus(parts), cardinality(parts)
    if n == 0:
        raise ValueError("empty set")
    bounds = box.lattice_bounds(q, n)
    if any(b < 1 for b in bounds):
        raise ValueError("the scaled region contains no lattice points")
    k = box.k
    scale = Fraction(q ** (k - 1), n**k)
    if k == 2:
        H = bounds[0]
        N = np.ones(H, dtype=object)
        for p in parts:
            N = N * _component_profile(p, H, "auto")[0][1:].astype(object)
        eps = [float(Fraction(int(v)) * scale - 1) for v in N]
    else:
        _check_budget(bounds, budget)
        eps = [float(count_tuples_any(parts, h) * scale - 1) for h in _lattice_points(bounds)]
    return math.fsum(e * e for e in eps) / len(eps)


def eps_sup(s: ResidueSet, k: int, budget: int = 200_000, samples: int = 20_000,
            seed: int = 0) -> tuple[float, bool]:
    """max |epsilon_k(h)| over distinct offsets 0 < h_1 < ... < h_{k-1} < p.

    Exhaustive when C(p-1, k-1) <= budget, otherwise over a seeded sample.
    Returns (value, exact).
    """
    p = s.q
    if k < 2:
        raise ValueError("k must be at least 2")
    if k == 2:
        prof, _ = n2_profile(s, p - 1)
        scale = Fraction(p, s.count**2)
        return max(abs(float(int(v) * scale - 1)) for v in prof[1:]), True
    total = math.comb(p - 1, k - 1)
    if total <= budget:
        tuples: Iterable = itertools.combinations(range(1, p), k - 1)
        exact = True
    else:
        rng = random.Random(seed)
        tuples = (tuple(sorted(rng.sample(range(1, p), k - 1))) for _ in range(samples))
        exact = False
    best = 0.0
    for h in tuples:
        best = max(best, abs(epsilon_k(s, h)))
    return best, exact
