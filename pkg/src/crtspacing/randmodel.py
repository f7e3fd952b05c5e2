"""Seeded random-set experiments: Bernoulli moments and the CRT counterexamples.

Trial i of a run with master seed S uses seed mix_seed(S, i), so a trial's
outcome does not depend on how trials are scheduled across threads.
Aggregates are taken with math.fsum over values in trial order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .sets import FamilySpec, ResidueSet, bernoulli_mask, generate, mix_seed
from .spacings import CorrelationBox, correlation, strong_poisson_stat


@dataclass
class MCEstimate:
    mean: float
    variance: float
    trials: int
    stderr: float
    seed: int
    values: list[float] = field(default_factory=list, repr=False)

    @classmethod
    def from_values(cls, values: Sequence[float], seed: int) -> "MCEstimate":
        n = len(values)
        if n < 2:
            raise ValueError("need at least two trials")
        mean = math.fsum(values) / n
        var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
        return cls(mean, var, n, math.sqrt(var / n), seed, list(values))

    def to_dict(self, with_values: bool = False) -> dict:
        out = asdict(self)
        if not with_values:
            out.pop("values")
        return out


def trial_seed(seed: int, index: int) -> int:
    return mix_seed(seed, index)


def run_trials(fn: Callable[[int], float], trials: int, seed: int, threads: int = 1) -> list[float]:
    seeds = [trial_seed(seed, i) for i in range(trials)]
    if threads <= 1:
        return [fn(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, seeds))


# -- Bernoulli sets ----------------------------------------------------------------------

def bernoulli_set(q: int, sigma: float, seed: int) -> ResidueSet:
    return generate(FamilySpec.bernoulli(sigma, seed), q)


def mc_correlation_moments(q: int, sigma: float, box: CorrelationBox, trials: int,
                           seed: int, threads: int = 1) -> tuple[MCEstimate, MCEstimate]:
    """Estimates of E(R_k) and E((R_k - vol)^2) over Bernoulli(1/sigma) subsets."""
    if sigma <= 1 and sigma != 1:
        raise ValueError("sigma must be >= 1")
    if trials < 2 or q < 2 * box.k:
        raise ValueError("degenerate parameters")
    k, vol = box.k, box.vol

    def one(s: int) -> float:
        omega = bernoulli_set(q, sigma, s)
        if omega.count < k:
            return 0.0
        return correlation(omega, box).r_k

    values = run_trials(one, trials, seed, threads)
    return (MCEstimate.from_values(values, seed),
            MCEstimate.from_values([(v - vol) ** 2 for v in values], seed))


def conditional_tuple_probability(q: int, r: int, k: int) -> Fraction:
    """P(k fixed residues all lie in a uniform r-subset) = C(q-k, r-k) / C(q, r)."""
    if r < k:
        return Fraction(0)
    return Fraction(math.comb(q - k, r - k), math.comb(q, r))


def enumerate_tuple_sums(q: int, h: Sequence[int]) -> dict[int, int]:
    """For each size r, the sum of N_k(h, A) over all r-subsets A of Z/qZ."""
    full = (1 << q) - 1
    shifts = [x % q for x in h]

    def rot(a: int, s: int) -> int:
        # bit t of the result is bit (t + s) mod q of a
        return ((a >> s) | (a << (q - s))) & full if s else a

    sums: dict[int, int] = {}
    for a in range(1 << q):
        acc = a
        for s in shifts:
            acc &= rot(a, s)
        r = a.bit_count()
        sums[r] = sums.get(r, 0) + acc.bit_count()
    return sums


def check_conditional_identity(q: int, h: Sequence[int]) -> bool:
    """sum_{|A| = r} N_k(h, A) == q * C(q-k, r-k) for every r (h_i distinct mod q)."""
    pts = {0, *(x % q for x in h)}
    k = len(h) + 1
    if len(pts) != k:
        raise ValueError("offsets must be distinct and nonzero mod q")
    sums = enumerate_tuple_sums(q, h)
    return all(sums[r] == q * math.comb(q - k, r - k) if r >= k else sums[r] == 0
               for r in range(q + 1))


# -- counterexample 1 ----------------------------------------------------------------------

CE1_LADDER = (0.25, 0.5, 1.0, 2.0)
CE1_THRESHOLD = 0.25


def counterexample1(sigma1: int, q1: int, seed: int, ladder: Sequence[float] = CE1_LADDER,
                    threshold: float = CE1_THRESHOLD) -> dict:
    """Bernoulli(1/sigma1) mod q1 composed with {1..sigma1} mod 2*sigma1.

    The control run is the Bernoulli factor on its own, same seed. The
    construction counts as non-Poisson when its largest |R_2/vol - 1| over
    the ladder exceeds ``threshold`` while the control's stays below it.
    """
    q2 = 2 * sigma1
    if math.gcd(q1, q2) != 1:
        raise ValueError("q1 must be coprime to 2 * sigma1")
    omega1 = bernoulli_set(q1, sigma1, seed)
    omega2 = generate(FamilySpec.interval(sigma1), q2)
    rows = []
    for b in ladder:
        box = CorrelationBox((b,))
        ce = correlation([omega1, omega2], box)
        ctl = correlation(omega1, box)
        rows.append({"b": b, "R2": ce.r_k, "ratio": ce.ratio, "control_R2": ctl.r_k,
                     "control_ratio": ctl.ratio, "method": ce.method})
    dev = max(abs(r["ratio"] - 1) for r in rows)
    ctl_dev = max(abs(r["control_ratio"] - 1) for r in rows)
    return {
        "q1": q1, "q2": q2, "sigma1": sigma1, "seed": seed, "rows": rows,
        "max_deviation": dev, "control_max_deviation": ctl_dev, "threshold": threshold,
        "non_poisson": dev > threshold and ctl_dev < threshold,
    }


# -- counterexample 2 ----------------------------------------------------------------------

def ce2_sets(q1: int, seed: int) -> tuple[ResidueSet, ResidueSet]:
    """S subset of [1, q1] with P(i in S) = q1^{-1/2}, read mod q1 and mod q1 + 1."""
    labels = np.arange(1, q1 + 1, dtype=np.int64)
    S = labels[bernoulli_mask(seed, labels, 1 / math.sqrt(q1))]
    spec = FamilySpec.explicit(())
    return (ResidueSet.from_members(q1, S % q1, spec), ResidueSet.from_members(q1 + 1, S, spec))


def ce2_predicted(t: float) -> float:
    return 2 * t - t * t / 2


def counterexample2(q1: int, t: float, trials: int, seed: int, threads: int = 1) -> dict:
    """Monte Carlo estimate of R_2((0, t]) for the correlated pair."""
    if not 0 < t < 1 / 3:
        raise ValueError("t must lie in (0, 1/3)")
    box = CorrelationBox((t,))

    def one(s: int) -> float:
        a, b = ce2_sets(q1, s)
        if a.count == 0:
            return 0.0
        return correlation([a, b], box).r_k

    est = MCEstimate.from_values(run_trials(one, trials, seed, threads), seed)
    return {"q1": q1, "q2": q1 + 1, "t": t, "estimate": est,
            "predicted": ce2_predicted(t), "poisson": t}


# -- counterexample 3 ----------------------------------------------------------------------

def counterexample3(q1: int, q2: int, m1: int, m2: int, sigma: float, box: CorrelationBox,
                    seed: int) -> dict:
    """Multiples of m_i in [1, q_i], each kept with probability m_i / sigma."""
    if m1 >= sigma or m2 >= sigma:
        raise ValueError("need m_i < sigma")
    if math.gcd(q1, q2) != 1:
        raise ValueError("q1 and q2 must be coprime")
    o1 = generate(FamilySpec.multiples(m1, m1 / sigma, mix_seed(seed, 1)), q1)
    o2 = generate(FamilySpec.multiples(m2, m2 / sigma, mix_seed(seed, 2)), q2)
    rep = correlation([o1, o2], box)
    return {"q1": q1, "q2": q2, "m1": m1, "m2": m2, "sigma": sigma, "seed": seed,
            "R2": rep.r_k, "vol": rep.vol, "ratio": rep.ratio,
            "predicted_ratio": math.gcd(m1, m2), "method": rep.method}


def counterexample3_averaged(q1: int, q2: int, m1: int, m2: int, sigma: float,
                             box: CorrelationBox, seeds: Sequence[int]) -> dict:
    runs = [counterexample3(q1, q2, m1, m2, sigma, box, s) for s in seeds]
    ratios = [r["ratio"] for r in runs]
    return {"runs": runs, "mean_ratio": math.fsum(ratios) / len(ratios),
            "predicted_ratio": math.gcd(m1, m2)}


# -- strongly Poisson probe ---------------------------------------------------------------

def strongly_poisson_probe(q: int, exponents: Sequence[float], theta: float, k: int,
                           trials: int, seed: int, threads: int = 1) -> list[dict]:
    """Mean of epsilon_k^2 over the scaled unit box for sigma = q^a, a in the ladder."""
    rows = []
    box = CorrelationBox((1.0,) * (k - 1), theta)
    for a in exponents:
        sigma = q**a

        def one(s: int) -> float:
            omega = bernoulli_set(q, sigma, s)
            if omega.count < k:
                return float("nan")
            return strong_poisson_stat(omega, box)

        est = MCEstimate.from_values(run_trials(one, trials, mix_seed(seed, int(a * 1e6)), threads),
                                     seed)
        rows.append({"exponent": a, "sigma": sigma, "mean_eps2": est.mean,
                     "stderr": est.stderr, "moment_scale": sigma ** (k + 1) / q})
    return rows
