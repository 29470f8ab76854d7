"""Shared fixtures: the two reference instances and a random-instance
generator used by the LP oracle and property tests."""

import json
import random
from fractions import Fraction
from pathlib import Path

import pytest

from cbandits import ProblemInstance
from cbandits.environment import parse_instance
from cbandits.families import NormalKnownVar

REPO = Path(__file__).resolve().parent.parent
INSTANCE_A_PATH = REPO / "instances" / "instance_a.json"
INSTANCE_B_PATH = REPO / "instances" / "instance_b.json"


@pytest.fixture
def instance_a():
    # k=2, L=1, costs ((0),(2)), rate (1), means (1,2)
    return ProblemInstance.build([[0], [2]], [1], [1, 2])


@pytest.fixture
def instance_b():
    # k=3, L=1, costs ((0),(2),(2)), rate (1), means (1,2,3/2)
    return ProblemInstance.build([[0], [2], [2]], [1], [1, 2, Fraction(3, 2)])


@pytest.fixture
def family_b(instance_b):
    return NormalKnownVar(sigmas=(1.0, 1.0, 1.0))


@pytest.fixture
def truth_b():
    return (1.0, 2.0, 1.5)


@pytest.fixture
def spec_b():
    with open(INSTANCE_B_PATH, "r", encoding="utf-8") as fh:
        return parse_instance(json.load(fh))


@pytest.fixture
def instance_b_doc():
    with open(INSTANCE_B_PATH, "r", encoding="utf-8") as fh:
        return json.load(fh)


def random_instance(rng: random.Random, k_max: int = 6, l_max: int = 3) -> ProblemInstance:
    """A valid random instance with rational data, denominators <= 8."""

    def frac(lo=0, hi=16):
        return Fraction(rng.randint(lo, hi), rng.randint(1, 8))

    while True:
        k = rng.randint(2, k_max)
        L = rng.randint(1, min(l_max, k - 1))
        rates = [frac(1, 16) for _ in range(L)]
        costs = []
        # bandit 1: strictly sub-rate on every resource
        row = []
        for j in range(L):
            while True:
                c = frac(0, 16)
                if c < rates[j]:
                    row.append(c)
                    break
        costs.append(row)
        for _ in range(1, k):
            row = []
            for j in range(L):
                while True:
                    c = frac(0, 16)
                    if c != rates[j]:
                        row.append(c)
                        break
            costs.append(row)
        if not any(costs[k - 1][j] > rates[j] for j in range(L)):
            continue
        means = [frac(1, 16) for _ in range(k)]
        return ProblemInstance(
            k, L, tuple(tuple(r) for r in costs), tuple(rates), tuple(means)
        )
