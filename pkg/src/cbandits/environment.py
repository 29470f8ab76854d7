"""Simulated bandit environment: per-bandit RNG streams, the budget ledger
enforcing the per-period resource constraints, and instance-file parsing.

The ledger stores exact rationals so feasibility is certified against the
rational cost data; rewards are ordinary floats.

Reproducibility contract: each bandit draws from its own PCG64 stream,
spawned from ``numpy.random.SeedSequence(seed)``; interleaving activations
of other bandits never perturbs the sequence a given bandit sees.  This
generator choice is pinned and must not change silently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .families import DiscreteFinite, FamilySpec, NormalKnownVar, NormalUnknownVar, means_vector, validate_truth
from .lp import ProblemInstance, to_fraction


class BudgetViolation(Exception):
    """An activation would push cumulative cost past the cumulative budget.
    Signals a policy bug; the environment never silently skips."""


@dataclass
class BudgetLedger:
    """Tracks cumulative spend against the replenishment rates."""

    rates: tuple[Fraction, ...]
    n: int = 0
    spent: list[Fraction] = field(default_factory=list)

    def __post_init__(self):
        if not self.spent:
            self.spent = [Fraction(0)] * len(self.rates)

    def slack(self) -> tuple[Fraction, ...]:
        return tuple(self.n * r - s for r, s in zip(self.rates, self.spent))

    def can_afford(self, costs: tuple[Fraction, ...]) -> bool:
        n1 = self.n + 1
        return all(s + c <= n1 * r for s, c, r in zip(self.spent, costs, self.rates))

    def charge(self, costs: tuple[Fraction, ...]) -> None:
        if not self.can_afford(costs):
            raise BudgetViolation(
                f"activation at period {self.n + 1} would violate the budget; "
                f"slack={self.slack()}, costs={costs}"
            )
        self.n += 1
        for j, c in enumerate(costs):
            self.spent[j] += c


@dataclass
class EnvState:
    """Single-replication mutable environment state.  One owner at a time;
    distinct replications own distinct EnvStates."""

    instance: ProblemInstance
    family: FamilySpec
    truth: tuple
    streams: list
    ledger: BudgetLedger
    total_reward: float = 0.0

    @classmethod
    def create(cls, instance: ProblemInstance, family: FamilySpec, truth, seed: int) -> "EnvState":
        children = np.random.SeedSequence(seed).spawn(instance.k)
        streams = [np.random.Generator(np.random.PCG64(c)) for c in children]
        return cls(
            instance=instance,
            family=family,
            truth=tuple(truth),
            streams=streams,
            ledger=BudgetLedger(rates=instance.rates),
        )

    def sample(self, alpha: int) -> float:
        """Draw from bandit alpha's true distribution (no ledger side effects)."""
        return self.family.draw(alpha, self.truth[alpha - 1], self.streams[alpha - 1])

    def activate(self, alpha: int) -> float:
        """Charge the ledger for one activation of alpha and return the reward."""
        self.ledger.charge(self.instance.costs[alpha - 1])
        reward = self.sample(alpha)
        self.total_reward += reward
        return reward


# ---------------------------------------------------------------------------
# Instance files
# ---------------------------------------------------------------------------

FAMILY_NAMES = ("normal_known_var", "normal_unknown_var", "discrete_finite")


@dataclass(frozen=True)
class InstanceSpec:
    """A fully specified problem: cost data, family, and truth parameters.
    Bandits are assumed pre-relabeled (validated, not inferred)."""

    instance: ProblemInstance
    family: FamilySpec
    truth: tuple

    @property
    def k(self) -> int:
        return self.instance.k


def _build_family_truth(family_name: str, truth: dict, k: int) -> tuple[FamilySpec, tuple]:
    if family_name == "normal_known_var":
        family = NormalKnownVar(sigmas=tuple(float(s) for s in truth["sigmas"]))
        params = tuple(float(m) for m in truth["means"])
    elif family_name == "normal_unknown_var":
        family = NormalUnknownVar()
        params = tuple(
            (float(m), float(v)) for m, v in zip(truth["means"], truth["variances"])
        )
    elif family_name == "discrete_finite":
        family = DiscreteFinite(
            supports=tuple(tuple(float(r) for r in sup) for sup in truth["supports"])
        )
        params = tuple(tuple(float(p) for p in probs) for probs in truth["probs"])
    else:
        raise ValueError(f"unknown family {family_name!r}; expected one of {FAMILY_NAMES}")
    if len(params) != k:
        raise ValueError("truth parameters must cover all k bandits")
    return family, params


def parse_instance(doc: dict) -> InstanceSpec:
    """Build an InstanceSpec from a decoded instance document.

    Costs and rates are decimal strings (or ints / fraction strings) parsed
    exactly to rationals.
    """
    k = int(doc["k"])
    L = int(doc["L"])
    costs = [[to_fraction(v) for v in row] for row in doc["costs"]]
    rates = [to_fraction(v) for v in doc["rates"]]
    if len(costs) != k or len(rates) != L:
        raise ValueError("costs/rates dimensions do not match k and L")
    family, params = _build_family_truth(doc["family"], doc["truth"], k)
    validate_truth(family, params)
    means = means_vector(family, params)
    instance = ProblemInstance.build(costs, rates, means)
    return InstanceSpec(instance=instance, family=family, truth=params)


def load_instance(path: str | Path) -> InstanceSpec:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return parse_instance(doc)


def instance_to_doc(spec: InstanceSpec) -> dict:
    """Inverse of parse_instance, for transport over the service API."""
    inst = spec.instance
    doc = {
        "k": inst.k,
        "L": inst.L,
        "costs": [[str(c) for c in row] for row in inst.costs],
        "rates": [str(r) for r in inst.rates],
        "family": spec.family.name,
    }
    if isinstance(spec.family, NormalKnownVar):
        doc["truth"] = {"means": list(spec.truth), "sigmas": list(spec.family.sigmas)}
    elif isinstance(spec.family, NormalUnknownVar):
        doc["truth"] = {
            "means": [t[0] for t in spec.truth],
            "variances": [t[1] for t in spec.truth],
        }
    else:
        doc["truth"] = {
            "supports": [list(sup) for sup in spec.family.supports],
            "probs": [list(p) for p in spec.truth],
        }
    return doc
