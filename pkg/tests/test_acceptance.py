"""Acceptance criteria, one test per criterion, at the stated tolerances.

Each test runs the matching verification suite and records a one-line
PASS/FAIL summary; conftest.py prints the summary block at the end of the
session. Run this file directly for the same lines without pytest.
"""

import sys

import pytest

from crtspacing.verify import DEFAULT_SEED, SUITES, run_suite

CRITERIA = [
    (1, "units-exact"),
    (2, "zero-mean"),
    (3, "crt-multiplicative"),
    (4, "davenport"),
    (5, "squares-poisson"),
    (6, "anomaly"),
    (7, "generic-poly"),
    (8, "gamma-bounds"),
    (9, "exponents"),
    (10, "lemma21-mc"),
    (11, "ce2"),
    (12, "ce3"),
    (13, "parity-lemma"),
    (14, "format"),
]

RESULTS: dict[int, str] = {}


def summarise(number: int, suite: str) -> tuple[bool, str]:
    res = run_suite(suite, DEFAULT_SEED)
    failed = [c for c in res.checks if not c.passed]
    line = f"AC{number:<2} {suite:<19} {'PASS' if res.passed else 'FAIL'}  ({len(res.checks)} checks"
    if failed:
        line += "; failing: " + "; ".join(f"{c.name} = {c.measured!r} (tol {c.tolerance})" for c in failed)
    return res.passed, line + ")"


@pytest.mark.slow
@pytest.mark.parametrize("number,suite", CRITERIA, ids=[f"AC{n}-{s}" for n, s in CRITERIA])
def test_criterion(number, suite):
    ok, line = summarise(number, suite)
    RESULTS[number] = line
    print(line)
    assert ok, line


def test_every_suite_has_a_criterion():
    assert [s for _, s in CRITERIA] == list(SUITES)


if __name__ == "__main__":
    all_ok = True
    for n, s in CRITERIA:
        ok, line = summarise(n, s)
        all_ok &= ok
        print(line, flush=True)
    sys.exit(0 if all_ok else 1)
