"""Verification suites, one per acceptance criterion.

Each suite returns a list of Check records; a suite passes when all of
them do. Suites take a master seed and an optional wall-clock budget in
seconds, checked between checks.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

import numpy as np
import sympy

from . import arith, gammacomb, polyval, randmodel
from .kernels import BudgetExceeded
from .report import ReportEnvelope
from .sets import FamilySpec, ResidueSet, components, crt_compose, generate
from .spacings import (CorrelationBox, OffsetTuple, correlation, count_tuples, e_k, gap_value_histogram,
                       gaps, ks_exp_distance)

DEFAULT_SEED = 20240601

SQUARES_Q = 3 * 5 * 7 * 11 * 13 * 17 * 19 * 23


@dataclass
class Check:
    name: str
    passed: bool
    measured: Any = None
    expected: Any = None
    tolerance: Any = None
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "measured": self.measured,
                "expected": self.expected, "tolerance": self.tolerance, "detail": self.detail}


@dataclass
class SuiteResult:
    suite: str
    checks: list[Check]
    elapsed_ms: int = 0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"suite": self.suite, "passed": self.passed,
                "checks": [c.to_dict() for c in self.checks]}


class _Clock:
    def __init__(self, budget: float | None):
        self.start = time.perf_counter()
        self.budget = budget

    def tick(self) -> None:
        if self.budget is not None and time.perf_counter() - self.start > self.budget:
            raise BudgetExceeded(f"suite exceeded its {self.budget}s budget")


def _within(name: str, measured: float, expected: float, tol: float, **detail) -> Check:
    return Check(name, abs(measured - expected) <= tol, measured, expected, tol, detail)


# -- suites ------------------------------------------------------------------------------

def units_exact(seed: int, clock: _Clock) -> list[Check]:
    p = 10007
    units = generate(FamilySpec.units(), p)
    rng = random.Random(seed)
    out = []
    for k in (2, 3, 4):
        seen: set[tuple[int, ...]] = set()
        while len(seen) < 50:
            seen.add(tuple(sorted(rng.sample(range(1, p), k - 1))))
        bad = [h for h in sorted(seen) if count_tuples(units, OffsetTuple(h)) != p - k]
        out.append(Check(f"N_{k} = p - k on 50 tuples", not bad, len(bad), 0, 0,
                         {"p": p, "failures": bad[:5]}))
        clock.tick()
    return out


def zero_mean(seed: int, clock: _Clock) -> list[Check]:
    out = []
    for q in (105, 1155):
        for fam in (FamilySpec.squares(), FamilySpec.units()):
            parts = components(fam, q)
            for d in arith.divisors_squarefree(q):
                if d == 1:
                    continue
                total = math.fsum(e_k(parts, (h,), d) for h in range(d))
                out.append(_within(f"{fam.kind} q={q} d={d}", total, 0.0, 1e-9 * d))
            clock.tick()
    return out


def crt_multiplicative(seed: int, clock: _Clock) -> list[Check]:
    rng = random.Random(seed)
    np_rng = np.random.default_rng(seed)
    failures = []
    for trial in range(200):
        while True:
            q1, q2 = rng.randint(2, 1000), rng.randint(2, 1000)
            if math.gcd(q1, q2) == 1:
                break
        parts = []
        for q in (q1, q2):
            rho = rng.uniform(0.05, 0.7)
            parts.append(ResidueSet.from_mask(np_rng.random(q) < rho))
        prod = crt_compose(parts)
        k = rng.randint(2, 4)
        h = tuple(sorted(rng.sample(range(1, q1 * q2), k - 1)))
        whole = count_tuples(prod, h)
        split = math.prod(count_tuples(p, [x % p.q for x in h]) for p in parts)
        if whole != split:
            failures.append({"q1": q1, "q2": q2, "h": h, "product": whole, "components": split})
        if trial % 20 == 19:
            clock.tick()
    return [Check("N_k(product) == prod N_k(component), 200 pairs", not failures, len(failures), 0, 0,
                  {"failures": failures[:5]})]


def small_gaps(seed: int, clock: _Clock) -> list[Check]:
    p = 1000003
    hist = gap_value_histogram(generate(FamilySpec.squares(), p), 5)
    return [_within(f"P(gap = {d})", float(hist[d - 1]), 2.0**-d, 0.01, p=p) for d in range(1, 6)]


def squares_poisson(seed: int, clock: _Clock) -> list[Check]:
    omega = generate(FamilySpec.squares(), SQUARES_Q)
    info = {"q": SQUARES_Q, "count": omega.count, "representation": omega.representation}
    out = [Check("ks_exp_distance", (ks := ks_exp_distance(gaps(omega))) <= 0.05, ks, 0.0, 0.05, info)]
    clock.tick()
    for bounds, tol in (((1.0,), 0.05), ((1.0, 1.0), 0.10)):
        rep = correlation(omega, CorrelationBox(bounds))
        out.append(_within(f"R_{rep.k} ratio, unit box", rep.ratio, 1.0, tol,
                           lattice_bounds=rep.lattice_bounds, method=rep.method))
        clock.tick()
    return out


def anomaly(seed: int, clock: _Clock) -> list[Check]:
    out = []
    for residue in (1, 3):
        primes = [p for p in arith.primes_in_range(10**5, 2 * 10**5) if p % 4 == residue][:10]
        for p in primes:
            r = polyval.anomaly_check(p)
            out.append(_within(f"N_2(1)/p, p={p}", r.measured, float(r.predicted), 10 / math.sqrt(p),
                               n2_direct=r.n2_direct, n2_legendre=r.n2_legendre))
        clock.tick()
    small = [p for p in arith.primes_in_range(7, 500)]
    mism = [p for p in small if (r := polyval.anomaly_check(p)).n2_direct != r.n2_legendre]
    out.append(Check("direct == Legendre path, 7 <= p <= 500", not mism, len(mism), 0, 0,
                     {"primes": len(small), "mismatches": mism}))
    return out


def generic_poly(seed: int, clock: _Clock) -> list[Check]:
    f = polyval.IntPolynomial((0, 1, 0, 0, 1))  # x^4 + x
    cert = polyval.critical_values_distinct(f)
    out = [Check("x^4 + x is generic", cert.generic, cert.distinct_count, f.degree - 1, 0),
           Check("c_4 = 5/8", polyval.c_n(4) == Fraction(5, 8), str(polyval.c_n(4)), "5/8", 0)]
    p = 10**5
    primes = []
    while len(primes) < 5:
        p += 1
        if arith.is_prime(p):
            primes.append(p)
    for p in primes:
        mask = polyval.value_set(f, p)
        dens = mask.sum() / p
        n2 = polyval.pair_count(mask, 1) / p
        out.append(_within(f"|Omega_p|/p, p={p}", float(dens), 5 / 8, 5 / math.sqrt(p)))
        out.append(_within(f"N_2(1)/p vs density^2, p={p}", n2, float(dens) ** 2, 10 / math.sqrt(p)))
    clock.tick()
    return out


def gamma_bounds(seed: int, clock: _Clock) -> list[Check]:
    out = []
    for k in (2, 3):
        for c in (2, 3, 5, 6, 10, 15, 30):
            weights = sorted({gammacomb.derive(G).gamma for G in gammacomb.enumerate_structures(c, k)})
            stir_bad = [g for g in weights
                        if gammacomb.count_structures(g, c, k) > gammacomb.stirling_product_bound(g, k)]
            out.append(Check(f"count_structures <= Stirling product, k={k} c={c}", not stir_bad,
                             len(stir_bad), 0, 0, {"weights": weights}))
            for H in (10, 20, 30):
                rows = gammacomb.bound_rows(k, c, H)
                prop_bad = [r["structure"] for r in rows if r["M_exact"] > r["prop_bound_min_over_sigma"]]
                cor_bad = [r["structure"] for r in rows if r["M_exact"] > r["cor_bound"]]
                out.append(Check(f"M_Gamma <= bounds, k={k} c={c} H={H}", not prop_bad and not cor_bad,
                                 len(prop_bad) + len(cor_bad), 0, 0,
                                 {"structures": len(rows), "prop_failures": prop_bad,
                                  "cor_failures": cor_bad}))
                total = sum(gammacomb.weight_counts(k, H, c).values())
                want = gammacomb.distinct_tuple_count(k, H)
                out.append(Check(f"sum_gamma M_gamma = #tuples, k={k} c={c} H={H}", total == want,
                                 total, want, 0))
            clock.tick()
    return out


def exponents(seed: int, clock: _Clock) -> list[Check]:
    lam2 = gammacomb.exponent_table(2)["lambda"]
    out = [_within("lambda_2", float(lam2), 0.56155, 1e-5, exact=str(lam2))]
    for k in range(3, 11):
        lam = gammacomb.exponent_table(k)["lambda"]
        want = sympy.Rational(1, 3) if k == 3 else sympy.Rational(1, k - 1)
        out.append(Check(f"lambda_{k} = {want}", sympy.simplify(lam - want) == 0, str(lam), str(want), 0))
    clock.tick()
    return out


def bernoulli_moments(seed: int, clock: _Clock, threads: int = 1) -> list[Check]:
    mean, var = randmodel.mc_correlation_moments(10**5, 100, CorrelationBox((1.0,)), 200, seed, threads)
    # the sample variance of R_2 itself, not the mean squared deviation from vol
    r_var = randmodel.MCEstimate.from_values(mean.values, seed).variance
    out = [_within("mean R_2", mean.mean, 1.0, 0.05, stderr=mean.stderr),
           Check("sample variance of R_2", r_var <= 0.05, r_var, 0.0, 0.05,
                 {"mean_sq_dev_from_vol": var.mean})]
    clock.tick()
    cases = [(q, h) for q in (6, 9, 12, 14) for h in ((1,), (3,), (1, 2), (2, 5))
             if len({0, *(x % q for x in h)}) == len(h) + 1]
    bad = [(q, h) for q, h in cases if not randmodel.check_conditional_identity(q, h)]
    out.append(Check("conditional identity by subset enumeration, q <= 14", not bad, len(bad), 0, 0,
                     {"cases": len(cases), "failures": bad}))
    return out


def ce2(seed: int, clock: _Clock, threads: int = 1) -> list[Check]:
    res = randmodel.counterexample2(10**6 + 7, 0.25, 20, seed, threads)
    est = res["estimate"]
    return [Check("mean R_2((0, 1/4])", 0.42 <= est.mean <= 0.52, est.mean, res["predicted"], [0.42, 0.52],
                  {"stderr": est.stderr, "poisson": res["poisson"]})]


def ce3(seed: int, clock: _Clock) -> list[Check]:
    box = CorrelationBox((1.0,))
    seeds = [randmodel.trial_seed(seed, i) for i in range(4)]
    out = []
    for (m1, m2), lo, hi in (((2, 2), 1.7, 2.3), ((2, 3), 0.85, 1.15)):
        res = randmodel.counterexample3_averaged(10**6, 10**6 - 1, m1, m2, 30, box, seeds)
        out.append(Check(f"R_2/vol, (m1, m2) = ({m1}, {m2})", lo <= res["mean_ratio"] <= hi,
                         res["mean_ratio"], res["predicted_ratio"], [lo, hi],
                         {"ratios": [r["ratio"] for r in res["runs"]]}))
        clock.tick()
    return out


def parity_cover(seed: int, clock: _Clock) -> list[Check]:
    t7 = polyval.parity_cover_exists({0, 1, 2, 4}, {0, 4, 6}, 7)
    out = [Check("p = 7 counterexample has no t", t7 is None, t7, None, 0)]
    rng = random.Random(seed)
    p, misses = 1009, []
    for _ in range(1000):
        total = rng.randint(2, 4)
        ns = rng.randint(1, total - 1)
        S = rng.sample(range(p), ns)
        H = rng.sample(range(p), total - ns)
        if polyval.parity_cover_exists(S, H, p) is None:
            misses.append((S, H))
    out.append(Check("1000 random (S, H) at p = 1009 all covered", not misses, len(misses), 0, 0,
                     {"misses": misses[:5]}))
    return out


def format_roundtrip(seed: int, clock: _Clock) -> list[Check]:
    rng = np.random.default_rng(seed)
    bad = []
    for i in range(100):
        q = int(rng.integers(1, 5000))
        mask = rng.random(q) < rng.uniform(0.0, 0.3)
        for rep in ("dense", "sparse"):
            s = ResidueSet.from_mask(mask, representation=rep)
            blob = s.to_bytes()
            back = ResidueSet.from_bytes(blob)
            if back != s or back.representation != rep or back.to_bytes() != blob:
                bad.append((i, rep))
    out = [Check("CRSP round trip, 100 sets x 2 representations", not bad, len(bad), 0, 0,
                 {"failures": bad[:5]})]
    clock.tick()
    texts = {}
    for threads in (1, 8):
        mean, var = randmodel.mc_correlation_moments(20011, 20, CorrelationBox((1.0,)), 16, seed, threads)
        env = ReportEnvelope("mc", {"q": 20011, "sigma": 20, "box": [1.0], "trials": 16},
                             {"mean": mean, "mean_sq_dev": var}, seed)
        texts[threads] = env.to_json(timing=False)
    out.append(Check("JSON report identical for --threads 1 and 8", texts[1] == texts[8],
                     texts[1] == texts[8], True, 0))
    return out


SUITES: dict[str, Callable[..., list[Check]]] = {
    "units-exact": units_exact,
    "zero-mean": zero_mean,
    "crt-multiplicative": crt_multiplicative,
    "davenport": small_gaps,
    "squares-poisson": squares_poisson,
    "anomaly": anomaly,
    "generic-poly": generic_poly,
    "gamma-bounds": gamma_bounds,
    "exponents": exponents,
    "lemma21-mc": bernoulli_moments,
    "ce2": ce2,
    "ce3": ce3,
    "parity-lemma": parity_cover,
    "format": format_roundtrip,
}

_THREADED = {"lemma21-mc", "ce2"}


def run_suite(name: str, seed: int = DEFAULT_SEED, budget: float | None = None,
              threads: int = 1) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    clock = _Clock(budget)
    fn = SUITES[name]
    checks = fn(seed, clock, threads) if name in _THREADED else fn(seed, clock)
    clock.tick()
    return SuiteResult(name, checks, int((time.perf_counter() - clock.start) * 1000))
