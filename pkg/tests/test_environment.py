"""Environment: budget ledger semantics, per-bandit RNG streams, and
instance-file parsing."""

import math
from fractions import Fraction

import pytest

from cbandits import BudgetLedger, BudgetViolation, EnvState, parse_instance
from cbandits.environment import instance_to_doc
from cbandits.families import DiscreteFinite, NormalKnownVar


# ---------------------------------------------------------------------------
# ledger
# ---------------------------------------------------------------------------


def test_activate_cheap_bandit(instance_a):
    env = EnvState.create(instance_a, NormalKnownVar((1.0, 1.0)), (1.0, 2.0), seed=0)
    env.activate(1)
    assert env.ledger.slack() == (Fraction(1),)


def test_activate_expensive_bandit_first_violates(instance_a):
    env = EnvState.create(instance_a, NormalKnownVar((1.0, 1.0)), (1.0, 2.0), seed=0)
    with pytest.raises(BudgetViolation):
        env.activate(2)


def test_alternating_sequence_legal(instance_a):
    env = EnvState.create(instance_a, NormalKnownVar((1.0, 1.0)), (1.0, 2.0), seed=0)
    env.activate(1)
    assert env.ledger.slack() == (Fraction(1),)
    env.activate(2)
    assert env.ledger.slack() == (Fraction(0),)


def test_slack_carries_forward():
    ledger = BudgetLedger(rates=(Fraction(1),))
    for _ in range(5):
        ledger.charge((Fraction(0),))
    assert ledger.slack() == (Fraction(5),)
    ledger.charge((Fraction(6),))
    assert ledger.slack() == (Fraction(0),)


def test_ledger_never_negative_after_accepted_charges():
    ledger = BudgetLedger(rates=(Fraction(1), Fraction(1, 2)))
    seq = [(Fraction(0), Fraction(0)), (Fraction(2), Fraction(1)), (Fraction(1), Fraction(0))]
    for costs in seq:
        ledger.charge(costs)
        assert all(s >= 0 for s in ledger.slack())


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def test_fixed_seed_reproducible(instance_a):
    fam = NormalKnownVar((1.0, 1.0))
    a = EnvState.create(instance_a, fam, (1.0, 2.0), seed=42)
    b = EnvState.create(instance_a, fam, (1.0, 2.0), seed=42)
    assert [a.sample(1) for _ in range(20)] == [b.sample(1) for _ in range(20)]


def test_streams_independent_of_interleaving(instance_a):
    fam = NormalKnownVar((1.0, 1.0))
    solo = EnvState.create(instance_a, fam, (1.0, 2.0), seed=7)
    pure = [solo.sample(1) for _ in range(10)]
    mixed_env = EnvState.create(instance_a, fam, (1.0, 2.0), seed=7)
    mixed = []
    for i in range(10):
        mixed_env.sample(2)  # draws on bandit 2 must not perturb bandit 1
        mixed.append(mixed_env.sample(1))
    assert mixed == pure


def test_normal_sample_mean(instance_a):
    fam = NormalKnownVar((1.0, 1.0))
    env = EnvState.create(instance_a, fam, (1.0, 2.0), seed=3)
    n = 10 ** 5
    mean = sum(env.sample(2) for _ in range(n)) / n
    assert abs(mean - 2.0) < 4.0 / math.sqrt(n)


def test_discrete_sample_mean(instance_a):
    eps = 1e-4
    fam = DiscreteFinite(supports=((0.0, 1.0), (0.0, 1.0)))
    env = EnvState.create(instance_a, fam, ((eps, 1 - eps), (eps, 1 - eps)), seed=4)
    n = 10 ** 4
    mean = sum(env.sample(1) for _ in range(n)) / n
    assert abs(mean - 1.0) < 0.02


def test_activate_accumulates_reward(instance_a):
    fam = NormalKnownVar((1.0, 1.0))
    env = EnvState.create(instance_a, fam, (1.0, 2.0), seed=5)
    total = sum(env.activate(1) for _ in range(10))
    assert env.total_reward == pytest.approx(total)


# ---------------------------------------------------------------------------
# instance files
# ---------------------------------------------------------------------------


def test_parse_decimal_strings_exact():
    doc = {
        "k": 2,
        "L": 1,
        "costs": [["0.1"], ["2.3"]],
        "rates": ["1.1"],
        "family": "normal_known_var",
        "truth": {"means": [1.0, 2.0], "sigmas": [1.0, 1.0]},
    }
    spec = parse_instance(doc)
    assert spec.instance.costs[0][0] == Fraction(1, 10)
    assert spec.instance.costs[1][0] == Fraction(23, 10)
    assert spec.instance.rates[0] == Fraction(11, 10)


def test_parse_all_families(instance_b_doc):
    spec = parse_instance(instance_b_doc)
    assert spec.k == 3
    assert spec.instance.means == (1, 2, Fraction(3, 2))

    doc_uv = {
        "k": 2,
        "L": 1,
        "costs": [["0"], ["2"]],
        "rates": ["1"],
        "family": "normal_unknown_var",
        "truth": {"means": [1.0, 2.0], "variances": [1.0, 4.0]},
    }
    spec = parse_instance(doc_uv)
    assert spec.truth == ((1.0, 1.0), (2.0, 4.0))

    doc_d = {
        "k": 2,
        "L": 1,
        "costs": [["0"], ["2"]],
        "rates": ["1"],
        "family": "discrete_finite",
        "truth": {
            "supports": [[0.0, 1.0], [0.0, 2.0]],
            "probs": [[0.5, 0.5], [0.25, 0.75]],
        },
    }
    spec = parse_instance(doc_d)
    assert spec.instance.means == (Fraction(1, 2), Fraction(3, 2))


def test_parse_rejects_bad_docs(instance_b_doc):
    bad = dict(instance_b_doc, family="poisson")
    with pytest.raises(ValueError):
        parse_instance(bad)
    bad = dict(instance_b_doc)
    bad["truth"] = {"means": [1.0, 2.0], "sigmas": [1.0, 1.0]}  # wrong length
    with pytest.raises(ValueError):
        parse_instance(bad)
    # relabeling is validated, not inferred: bandit 1 must be sub-rate
    bad = dict(instance_b_doc, costs=[["2"], ["0"], ["2"]])
    with pytest.raises(ValueError):
        parse_instance(bad)


def test_doc_round_trip(instance_b_doc):
    spec = parse_instance(instance_b_doc)
    doc = instance_to_doc(spec)
    again = parse_instance(doc)
    assert again.instance == spec.instance
    assert again.truth == spec.truth
    assert again.family == spec.family
