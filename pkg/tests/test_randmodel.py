import itertools
import math
from fractions import Fraction

import pytest

from crtspacing import randmodel as rm
from crtspacing.sets import FamilySpec, crt_compose, generate
from crtspacing.spacings import CorrelationBox, correlation


def test_mc_estimate():
    est = rm.MCEstimate.from_values([1.0, 2.0, 3.0, 4.0], 9)
    assert est.mean == 2.5 and est.variance == pytest.approx(5 / 3)
    assert est.stderr == pytest.approx(math.sqrt(5 / 12))
    assert "values" not in est.to_dict()
    with pytest.raises(ValueError):
        rm.MCEstimate.from_values([1.0], 0)


def test_trials_are_deterministic_across_threads():
    box = CorrelationBox((1.0,))
    a, _ = rm.mc_correlation_moments(20011, 20, box, 12, 5, threads=1)
    b, _ = rm.mc_correlation_moments(20011, 20, box, 12, 5, threads=4)
    c, _ = rm.mc_correlation_moments(20011, 20, box, 12, 6, threads=1)
    assert a.values == b.values and a.mean == b.mean
    assert a.values != c.values


def test_trial_seeds_independent_of_count():
    seen = rm.run_trials(lambda s: float(s % 1000), 5, 77)
    assert rm.run_trials(lambda s: float(s % 1000), 8, 77)[:5] == seen


def test_full_set_limit():
    box = CorrelationBox((2.5,))
    mean, dev = rm.mc_correlation_moments(1000, 1, box, 3, 0)
    assert mean.mean == 2.0 and mean.variance == 0


def test_conditional_probability_by_enumeration():
    q = 8
    for r in range(q + 1):
        for k in range(1, 4):
            fixed = set(range(k))
            hits = sum(fixed <= set(A) for A in itertools.combinations(range(q), r))
            assert rm.conditional_tuple_probability(q, r, k) == Fraction(hits, math.comb(q, r))


@pytest.mark.parametrize("q,h", [(5, (1,)), (7, (2, 3)), (10, (1, 4)), (12, (3,)), (14, (1,)), (14, (2, 5))])
def test_conditional_identity(q, h):
    assert rm.check_conditional_identity(q, h)


def test_conditional_identity_rejects_repeats():
    with pytest.raises(ValueError):
        rm.check_conditional_identity(6, (6,))


def test_ce2_predicted():
    assert rm.ce2_predicted(0.25) == 0.46875
    assert rm.ce2_predicted(0.0) == 0.0
    with pytest.raises(ValueError):
        rm.counterexample2(1009, 0.5, 2, 0)


@pytest.mark.parametrize("q1", [1009, 10007, 29989])
def test_ce2_multiplicative_equals_materialised(q1):
    for seed in range(3):
        a, b = rm.ce2_sets(q1, seed)
        box = CorrelationBox((0.25,))
        split = correlation([a, b], box)
        whole = correlation(crt_compose([a, b]), box)
        assert split.tuple_sum == whole.tuple_sum and split.r_k == whole.r_k
        # the composed set is exactly S read mod q1 (q1 + 1)
        assert whole.count == a.count * b.count


def test_ce2_sets_share_labels():
    a, b = rm.ce2_sets(10007, 3)
    assert a.count == b.count
    assert set((b.elements % 10007).tolist()) == set(a.elements.tolist())


def test_ce1_detects_non_poisson():
    res = rm.counterexample1(100, 10**6 + 7, 0)
    assert res["non_poisson"]
    assert res["q2"] == 200
    with pytest.raises(ValueError):
        rm.counterexample1(50, 1000, 0)


def test_ce3_gcd_prediction_small():
    box = CorrelationBox((1.0,))
    same = rm.counterexample3_averaged(30000, 29999, 2, 2, 30, box, [1, 2, 3])
    mixed = rm.counterexample3_averaged(30000, 29999, 2, 3, 30, box, [1, 2, 3])
    assert same["predicted_ratio"] == 2 and 1.7 <= same["mean_ratio"] <= 2.3
    assert mixed["predicted_ratio"] == 1 and 0.85 <= mixed["mean_ratio"] <= 1.15
    with pytest.raises(ValueError):
        rm.counterexample3(30000, 29998, 2, 2, 30, box, 0)
    with pytest.raises(ValueError):
        rm.counterexample3(30000, 29999, 40, 2, 30, box, 0)


def test_ce3_members_are_multiples():
    o = generate(FamilySpec.multiples(3, 0.5, 4), 999)
    assert all(int(x) % 3 == 0 for x in o.elements)


def test_ce3_unit_step_matches_bernoulli_model():
    q1, q2, sigma = 1009, 1013, 5.0
    box = CorrelationBox((1.0,))
    seeds = [rm.trial_seed(21, i) for i in range(30)]
    ce3 = [rm.counterexample3(q1, q2, 1, 1, sigma, box, s)["R2"] for s in seeds]
    a = rm.MCEstimate.from_values(ce3, 21)
    b, _ = rm.mc_correlation_moments(q1 * q2, sigma * sigma, box, 30, 22)
    assert abs(a.mean - b.mean) <= 3 * math.hypot(a.stderr, b.stderr)


def test_strongly_poisson_probe_grows_with_sigma():
    rows = rm.strongly_poisson_probe(20011, (0.25, 0.5), 1.0, 2, 8, 0)
    assert [r["exponent"] for r in rows] == [0.25, 0.5]
    assert rows[1]["mean_eps2"] > 10 * rows[0]["mean_eps2"]
    assert rows[1]["mean_eps2"] > 0.1
