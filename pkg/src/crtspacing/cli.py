"""crtspacing command-line interface.

Exit codes: 0 success, 1 check failure, 2 usage or input error,
3 budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import arith, gammacomb, polyval, randmodel, verify
from .kernels import BudgetExceeded
from .report import ReportEnvelope, jsonable
from .sets import (DEFAULT_CAP, FAMILIES, CapExceeded, FamilySpec, ResidueSet, components,
                   crt_compose, gen_prime_set, generate)
from .spacings import (LATTICE_BUDGET, CorrelationBox, correlation, gap_value_histogram, gaps,
                       ks_exp_distance, tail_csv, tail_table)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(ValueError):
    pass


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


# -- output -----------------------------------------------------------------------------

def _emit(args, text: str) -> None:
    if args.out and args.command != "gen":
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _envelope(args, inputs: dict, results, started: float) -> ReportEnvelope:
    return ReportEnvelope(args.command, inputs, results, args.seed,
                          int((time.perf_counter() - started) * 1000))


def _rows_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def _load(paths: Sequence[str]) -> list[ResidueSet]:
    out = []
    for p in paths:
        try:
            out.append(ResidueSet.load(p))
        except OSError as exc:
            raise UsageError(f"cannot read {p}: {exc.strerror or exc}") from None
    return out


# -- gen ------------------------------------------------------------------------------

def _family(args) -> FamilySpec:
    kind = args.family
    if kind == "units":
        return FamilySpec.units()
    if kind == "squares":
        return FamilySpec.squares()
    if kind == "dth_powers":
        if args.d is None:
            raise UsageError("--family dth_powers needs --d")
        return FamilySpec.dth_powers(args.d)
    if kind == "poly_image":
        if not args.coeffs:
            raise UsageError("--family poly_image needs --coeffs")
        return FamilySpec.poly_image(args.coeffs)
    if kind == "curve":
        if args.a is None or args.b is None:
            raise UsageError("--family curve needs --a and --b")
        return FamilySpec.curve(args.a, args.b)
    if kind == "interval":
        if args.n is None:
            raise UsageError("--family interval needs --n")
        return FamilySpec.interval(args.n)
    if kind == "multiples":
        if args.m is None:
            raise UsageError("--family multiples needs --m")
        return FamilySpec.multiples(args.m, args.density if args.density is not None else 1.0, args.seed)
    if kind == "bernoulli":
        if args.sigma is None:
            raise UsageError("--family bernoulli needs --sigma")
        return FamilySpec.bernoulli(args.sigma, args.seed)
    if kind == "explicit":
        if args.members is None:
            raise UsageError("--family explicit needs --members")
        return FamilySpec.explicit(args.members)
    raise UsageError(f"unknown family {kind}")


def _set_stats(s: ResidueSet) -> dict:
    out = {"q": s.q, "count": s.count, "representation": s.representation}
    if s.count:
        out.update(r_q=s.count / s.q, s_q=s.q / s.count, s_q_exact=str(Fraction(s.q, s.count)))
    return out


def cmd_gen(args) -> int:
    started = time.perf_counter()
    if (args.q is None) == (args.p_list is None):
        raise UsageError("give exactly one of --q and --p-list")
    family = _family(args)
    q = args.q if args.q is not None else math.prod(args.p_list)
    if args.p_list is not None:
        for p in args.p_list:
            if not arith.is_prime(p):
                raise UsageError(f"--p-list entry {p} is not prime")
        if not arith.pairwise_coprime(args.p_list):
            raise UsageError("--p-list primes must be distinct")
    inputs = {"family": family.to_dict(), "q": q, "p_list": args.p_list,
              "components_only": args.components_only, "representation": args.representation}
    if args.components_only:
        if args.p_list is not None:
            parts = [gen_prime_set(family, p) for p in args.p_list]
        else:
            parts = components(family, q)
        results = {"q": q, "count": math.prod(p.count for p in parts),
                   "components": [_set_stats(p) for p in parts]}
        if results["count"]:
            results.update(r_q=results["count"] / q, s_q=q / results["count"],
                           s_q_exact=str(Fraction(q, results["count"])))
        if args.out:
            paths = []
            for p in parts:
                path = f"{args.out}.{p.q}"
                p.save(path)
                paths.append(path)
            results["paths"] = paths
    else:
        try:
            if args.p_list is not None and family.kind in ("squares", "dth_powers", "poly_image", "curve"):
                s = crt_compose([gen_prime_set(family, p) for p in args.p_list], args.cap, family)
            else:
                s = generate(family, q, args.cap)
        except CapExceeded as exc:
            raise UsageError(f"{exc}; rerun with --components-only") from None
        if args.representation != "auto":
            s = ResidueSet.from_members(s.q, s.elements, s.family, args.representation)
        results = _set_stats(s)
        if args.out:
            s.save(args.out)
            results["path"] = args.out
    env = _envelope(args, inputs, results, started)
    if args.format == "csv":
        rows = results.get("components", [results])
        _emit(args, _rows_csv(["q", "count", "r_q", "s_q"],
                              [[r["q"], r["count"], r.get("r_q", ""), r.get("s_q", "")] for r in rows]))
    else:
        _emit(args, env.to_json())
    return EXIT_OK


# -- gaps ------------------------------------------------------------------------------

def cmd_gaps(args) -> int:
    started = time.perf_counter()
    (s,) = _load([args.set])
    profile = gaps(s)
    if args.hist_bins < 1:
        raise UsageError("--hist-bins must be positive")
    ts = [args.t_max * i / args.hist_bins for i in range(args.hist_bins + 1)]
    if args.format == "csv":
        _emit(args, tail_csv(profile, ts))
        return EXIT_OK
    results = {"q": s.q, "count": s.count, "s_q": float(profile.s),
               "ks_exp_distance": ks_exp_distance(profile),
               "tails": [{"t": t, "empirical_tail": e, "exp_tail": x} for t, e, x in tail_table(profile, ts)]}
    if args.davenport:
        hist = gap_value_histogram(s, args.davenport)
        results["davenport"] = [{"d": d, "proportion": float(hist[d - 1]), "predicted": 2.0**-d}
                                for d in range(1, args.davenport + 1)]
    inputs = {"set": args.set, "hist_bins": args.hist_bins, "t_max": args.t_max,
              "davenport": args.davenport}
    _emit(args, _envelope(args, inputs, results, started).to_json())
    return EXIT_OK


# -- corr ----------------------------------------------------------------------------

def cmd_corr(args) -> int:
    started = time.perf_counter()
    if len(args.box) != args.k - 1:
        raise UsageError(f"--k {args.k} needs {args.k - 1} box bounds, got {len(args.box)}")
    parts = _load(args.sets)
    box = CorrelationBox(tuple(args.box), args.theta)
    target = parts[0] if len(parts) == 1 else parts
    rep = correlation(target, box, args.method, args.budget)
    inputs = {"sets": args.sets, "k": args.k, "box": args.box, "theta": args.theta,
              "method": args.method}
    if args.format == "csv":
        d = rep.to_dict()
        keys = ["k", "theta", "tuple_sum", "R_k", "vol", "ratio", "method", "kernel", "count", "q"]
        _emit(args, _rows_csv(keys, [[d[k] for k in keys]]))
    else:
        _emit(args, _envelope(args, inputs, rep, started).to_json())
    return EXIT_OK


# -- verify ----------------------------------------------------------------------------

def cmd_verify(args) -> int:
    started = time.perf_counter()
    names = list(verify.SUITES) if args.suite == "all" else [args.suite]
    for n in names:
        if n not in verify.SUITES:
            raise UsageError(f"unknown suite {n!r}; choose from all, {', '.join(verify.SUITES)}")
    seed = verify.DEFAULT_SEED if args.seed is None else args.seed
    results = [verify.run_suite(n, seed, args.budget, args.threads) for n in names]
    ok = all(r.passed for r in results)
    for r in results:
        for c in r.checks:
            print(f"{'PASS' if c.passed else 'FAIL'}  {r.suite}: {c.name}", file=sys.stderr)
    if args.format == "csv":
        rows = [[r.suite, c.name, int(c.passed), json.dumps(jsonable(c.measured)),
                 json.dumps(jsonable(c.expected)), json.dumps(jsonable(c.tolerance))]
                for r in results for c in r.checks]
        _emit(args, _rows_csv(["suite", "check", "passed", "measured", "expected", "tolerance"], rows))
    else:
        env = ReportEnvelope("verify", {"suites": names, "budget": args.budget, "threads": args.threads},
                             {"passed": ok, "suites": [r.to_dict() for r in results]}, seed,
                             int((time.perf_counter() - started) * 1000))
        _emit(args, env.to_json())
    return EXIT_OK if ok else EXIT_FAIL


# -- gamma ------------------------------------------------------------------------------

DEFAULT_TRIPLES = ((2, 3, 5), (3, 5, 7), (5, 7, 11), (7, 11, 13))


def cmd_gamma(args) -> int:
    started = time.perf_counter()
    inputs = {"mode": args.mode, "k": args.k, "c": args.c, "H": args.H}
    if args.mode == "bounds":
        if not arith.is_squarefree(args.c):
            raise UsageError("--c must be squarefree")
        rows = gammacomb.bound_rows(args.k, args.c, args.H)
        if args.format == "csv":
            _emit(args, gammacomb.bound_csv(rows))
            return EXIT_OK
        results = {"rows": rows}
    elif args.mode == "exponents":
        if args.k < 2:
            raise UsageError("--k must be at least 2")
        table = [gammacomb.exponent_table(k) for k in range(2, args.k + 1)]
        rows = [{"k": t["k"], "tau_1": t["tau_1"], "lambda": str(t["lambda"]),
                 "lambda_float": float(t["lambda"])} for t in table]
        if args.format == "csv":
            _emit(args, _rows_csv(["k", "tau_1", "lambda", "lambda_float"],
                                  [[r["k"], r["tau_1"], r["lambda"], r["lambda_float"]] for r in rows]))
            return EXIT_OK
        results = {"rows": rows}
    else:
        rows = gammacomb.tightness_experiment(args.H, DEFAULT_TRIPLES)
        for r in rows:
            r["ratio_to_naive"] = r["M_exact"] / r["naive"]
        keys = ["g01", "g02", "g12", "H", "M_exact", "cor_bound", "naive", "ratio_to_naive"]
        if args.format == "csv":
            _emit(args, _rows_csv(keys, [[r[k] for k in keys] for r in rows]))
            return EXIT_OK
        results = {"rows": rows}
    _emit(args, _envelope(args, inputs, results, started).to_json())
    return EXIT_OK


# -- poly ---------------------------------------------------------------------------

def cmd_poly(args) -> int:
    started = time.perf_counter()
    f = polyval.IntPolynomial(tuple(args.coeffs))
    if f.degree < 2:
        raise UsageError("polynomial degree must be at least 2")
    cert = polyval.critical_values_distinct(f)
    results: dict = {"coeffs": list(f.coeffs), "degree": f.degree,
                     "critical_values_distinct": cert.distinct_count, "generic": cert.generic,
                     "c_n": str(polyval.c_n(f.degree)), "c_n_float": float(polyval.c_n(f.degree)),
                     "primes": []}
    for p in args.p or []:
        if not arith.is_prime(p) or p <= f.degree:
            raise UsageError(f"{p} must be a prime larger than the degree")
        mask = polyval.value_set(f, p)
        n = int(mask.sum())
        row = {"p": p, "value_count": n, "density": n / p,
               "N2_1": polyval.pair_count(mask, 1), "N2_1_over_p": polyval.pair_count(mask, 1) / p,
               "critical_values_mod_p": polyval.critical_values_mod_p(f, p)}
        if args.anomaly:
            r = polyval.anomaly_check(p)
            row.update(anomaly_n2_direct=r.n2_direct, anomaly_n2_legendre=r.n2_legendre,
                       anomaly_predicted=str(r.predicted))
            sp = polyval.s_p_legendre_count(p)
            row.update(s_p_direct=sp.direct, s_p_legendre=sp.legendre, s_p_formula=str(sp.formula))
        results["primes"].append(row)
    inputs = {"coeffs": args.coeffs, "p": args.p, "anomaly": args.anomaly}
    if args.format == "csv":
        keys = ["p", "value_count", "density", "N2_1", "N2_1_over_p"]
        _emit(args, _rows_csv(keys, [[r[k] for k in keys] for r in results["primes"]]))
    else:
        _emit(args, _envelope(args, inputs, results, started).to_json())
    return EXIT_OK


# -- mc ---------------------------------------------------------------------------------

def cmd_mc(args) -> int:
    started = time.perf_counter()
    seed = args.seed
    inputs = {"q": args.q, "sigma": args.sigma, "box": args.box, "theta": args.theta,
              "trials": args.trials, "probe": args.probe}
    if args.probe:
        rows = randmodel.strongly_poisson_probe(args.q, args.probe, args.theta, len(args.box) + 1,
                                                args.trials, seed, args.threads)
        results = {"rows": rows}
        if args.format == "csv":
            keys = ["exponent", "sigma", "mean_eps2", "stderr", "moment_scale"]
            _emit(args, _rows_csv(keys, [[r[k] for k in keys] for r in rows]))
            return EXIT_OK
    else:
        box = CorrelationBox(tuple(args.box), args.theta)
        mean, dev = randmodel.mc_correlation_moments(args.q, args.sigma, box, args.trials, seed, args.threads)
        results = {"vol": box.vol, "mean_R": mean, "mean_sq_dev": dev,
                   "sample_variance_R": randmodel.MCEstimate.from_values(mean.values, seed).variance}
        if args.format == "csv":
            _emit(args, _rows_csv(["trial", "R_k"], list(enumerate(mean.values))))
            return EXIT_OK
    _emit(args, _envelope(args, inputs, results, started).to_json())
    return EXIT_OK


# -- counterexample ---------------------------------------------------------------------

def cmd_counterexample(args) -> int:
    started = time.perf_counter()
    seed = args.seed
    v = args.variant
    if v == "ce1":
        results = randmodel.counterexample1(args.sigma1, args.q1, seed)
        inputs = {"variant": v, "sigma1": args.sigma1, "q1": args.q1}
        rows = results["rows"]
        keys = ["b", "R2", "ratio", "control_R2", "control_ratio"]
    elif v == "ce2":
        results = randmodel.counterexample2(args.q1, args.t, args.trials, seed, args.threads)
        inputs = {"variant": v, "q1": args.q1, "t": args.t, "trials": args.trials}
        rows = [{"trial": i, "R2": x} for i, x in enumerate(results["estimate"].values)]
        keys = ["trial", "R2"]
    else:
        q2 = args.q2 if args.q2 is not None else args.q1 - 1
        box = CorrelationBox((args.t,))
        seeds = [randmodel.trial_seed(seed, i) for i in range(args.trials)]
        results = randmodel.counterexample3_averaged(args.q1, q2, args.m1, args.m2, args.sigma, box, seeds)
        inputs = {"variant": v, "q1": args.q1, "q2": q2, "m1": args.m1, "m2": args.m2,
                  "sigma": args.sigma, "t": args.t, "trials": args.trials}
        rows = results["runs"]
        keys = ["seed", "R2", "vol", "ratio", "predicted_ratio"]
    if args.format == "csv":
        _emit(args, _rows_csv(keys, [[r[k] for k in keys] for r in rows]))
    else:
        _emit(args, _envelope(args, inputs, results, started).to_json())
    return EXIT_OK


# -- parser -------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=_seed, default=None, help="64-bit master seed")
    common.add_argument("--threads", type=int, default=1, help="worker cap for Monte Carlo trials")
    common.add_argument("--out", default=None, help="output path (the set file for gen)")

    ap = argparse.ArgumentParser(prog="crtspacing", description=__doc__.splitlines()[0],
                                 parents=[common])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="build a residue set",
                       formatter_class=argparse.RawDescriptionHelpFormatter,
                       epilog="polynomials are constant term first: --coeffs 0,0,-2,0,1 is x^4 - 2x^2")
    g.add_argument("--family", choices=FAMILIES, required=True)
    g.add_argument("--q", type=int)
    g.add_argument("--p-list", type=_ints)
    g.add_argument("--d", type=int)
    g.add_argument("--coeffs", type=_ints)
    g.add_argument("--a", type=int)
    g.add_argument("--b", type=int)
    g.add_argument("--n", type=int, help="interval length")
    g.add_argument("--m", type=int, help="multiples step")
    g.add_argument("--density", type=float)
    g.add_argument("--sigma", type=float)
    g.add_argument("--members", type=_ints)
    g.add_argument("--representation", choices=("auto", "dense", "sparse"), default="auto")
    g.add_argument("--cap", type=int, default=DEFAULT_CAP)
    g.add_argument("--components-only", action="store_true")
    g.set_defaults(func=cmd_gen)

    g = sub.add_parser("gaps", parents=[common], help="gap tails and histogram")
    g.add_argument("set")
    g.add_argument("--hist-bins", type=int, default=50)
    g.add_argument("--t-max", type=float, default=5.0)
    g.add_argument("--davenport", type=int, default=0, metavar="D_MAX")
    g.set_defaults(func=cmd_gaps)

    g = sub.add_parser("corr", parents=[common], help="k-level correlation over a box")
    g.add_argument("sets", nargs="+", help="a set file, or several CRT component files")
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--box", type=_floats, default=[1.0])
    g.add_argument("--theta", type=float, default=1.0)
    g.add_argument("--method", choices=("auto", "popcount", "difference", "enumeration"), default="auto")
    g.add_argument("--budget", type=int, default=LATTICE_BUDGET, help="lattice point budget")
    g.set_defaults(func=cmd_corr)

    g = sub.add_parser("verify", parents=[common], help="run verification suites")
    g.add_argument("--suite", default="all")
    g.add_argument("--budget", type=float, default=None, help="seconds per suite")
    g.set_defaults(func=cmd_verify)

    g = sub.add_parser("gamma", parents=[common], help="gamma-structure counts, bounds, exponents")
    g.add_argument("--mode", choices=("bounds", "exponents", "tightness"), default="bounds")
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--c", type=int, default=30)
    g.add_argument("--H", type=int, default=20)
    g.set_defaults(func=cmd_gamma)

    g = sub.add_parser("poly", parents=[common], help="polynomial value sets mod p",
                       epilog="coefficients are constant term first: 0,1,0,0,1 is x^4 + x")
    g.add_argument("--coeffs", type=_ints, required=True)
    g.add_argument("--p", type=_ints)
    g.add_argument("--anomaly", action="store_true", help="also run the x^4 - 2x^2 checks at each p")
    g.set_defaults(func=cmd_poly)

    g = sub.add_parser("mc", parents=[common], help="Bernoulli random-set moments")
    g.add_argument("--q", type=int, default=10**5)
    g.add_argument("--sigma", type=float, default=100.0)
    g.add_argument("--box", type=_floats, default=[1.0])
    g.add_argument("--theta", type=float, default=1.0)
    g.add_argument("--trials", type=int, default=200)
    g.add_argument("--probe", type=_floats, help="sigma = q^a ladder for the strong-Poisson statistic")
    g.set_defaults(func=cmd_mc)

    g = sub.add_parser("counterexample", parents=[common], help="CRT counterexamples")
    g.add_argument("--variant", choices=("ce1", "ce2", "ce3"), required=True)
    g.add_argument("--q1", type=int, default=10**6 + 7)
    g.add_argument("--q2", type=int)
    g.add_argument("--sigma1", type=int, default=100)
    g.add_argument("--sigma", type=float, default=30.0)
    g.add_argument("--m1", type=int, default=2)
    g.add_argument("--m2", type=int, default=2)
    g.add_argument("--t", type=float, default=0.25)
    g.add_argument("--trials", type=int, default=20)
    g.set_defaults(func=cmd_counterexample)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be positive")
    if args.seed is None and args.command != "verify":
        args.seed = 0
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"crtspacing: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (UsageError, CapExceeded, ValueError, KeyError) as exc:
        print(f"crtspacing {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
