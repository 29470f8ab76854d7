"""Regret computation, its dual decomposition, block regret, and the
asymptotic lower bound on regret per log n.

All identities are evaluated on realized single-path counters; expectations
are estimated by replication averaging in the harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from . import lp
from .families import FamilySpec
from .lp import Basis, ProblemInstance


class NotOptimalBasis(Exception):
    """The supplied basis is not optimal under the truth."""


class AmbiguousPhi(Exception):
    """Multiple optimal bases assign different reduced costs to a bandit in
    the lower-bound set; the report cannot pick one without guessing."""


@dataclass(frozen=True)
class CheckpointRow:
    """Trajectory counters captured at a block boundary."""

    n: int
    T: tuple[int, ...]
    spent: tuple[Fraction, ...]
    reward: float
    blocks_completed: int


@dataclass(frozen=True)
class RunStats:
    """Full trajectory record of one policy replication."""

    k: int
    L: int
    horizon: int
    n_final: int
    T: tuple[int, ...]
    spent: tuple[Fraction, ...]
    reward: float
    blocks_completed: int
    tilde_counts: dict[Basis, int]
    m0: dict[int, int]
    block_counts_by_basis: dict[Basis, dict[int, int]]
    checkpoint_rows: list[CheckpointRow] = field(default_factory=list)


def pseudo_regret(instance: ProblemInstance, counts: Sequence[int], n: int | None = None) -> float:
    """n z* minus the truth-mean-weighted activation counts."""
    if n is None:
        n = sum(counts)
    z = lp.solve_primal(instance).z_star
    total = n * z - sum(
        (m * c for m, c in zip(instance.means, counts)), Fraction(0)
    )
    return float(total)


def regret_decomposition(
    instance: ProblemInstance,
    counts: Sequence[int],
    basis: Basis,
    n: int | None = None,
) -> tuple[float, float]:
    """Split the pseudo-regret into the exploration term (reduced costs times
    counts) and the slack term (duals times unused budget).

    Both terms are nonnegative for an optimal basis and sum to the
    pseudo-regret exactly, per path.
    """
    if n is None:
        n = sum(counts)
    sol_x = lp.basic_solution(basis, instance)
    if sol_x is None:
        raise NotOptimalBasis(f"basis {basis} is singular")
    x, y = sol_x
    if any(v < 0 for v in x) or any(v < 0 for v in y):
        raise NotOptimalBasis(f"basis {basis} is not feasible")
    g = lp.dual_vector(basis, instance)
    phis = [lp.reduced_cost(basis, instance, a) for a in range(1, instance.k + 1)]
    if any(p < 0 for p in phis):
        raise NotOptimalBasis(f"basis {basis} is not optimal under the truth")
    term1 = sum((p * c for p, c in zip(phis, counts)), Fraction(0))
    term2 = Fraction(0)
    for i in range(instance.L):
        used = sum(
            (instance.costs[j][i] * counts[j] for j in range(instance.k)), Fraction(0)
        )
        term2 += g[i] * (n * instance.rates[i] - used)
    return float(term1), float(term2)


def block_regret(
    instance: ProblemInstance,
    tilde_counts: Mapping[Basis, int],
    block_counts: Mapping[Basis, Mapping[int, int]],
    m0: Mapping[int, int],
) -> float:
    """Single-path block regret over the completed blocks: total completed
    length times z* minus the truth-mean-weighted block activation counts."""
    z = lp.solve_primal(instance).z_star
    s = sum(m0.values())
    reward = sum(
        (instance.means[a - 1] * c for a, c in m0.items()), Fraction(0)
    )
    for basis, tb in tilde_counts.items():
        counts = block_counts[basis]
        s += tb * sum(counts.values())
        for a, c in counts.items():
            reward += instance.means[a - 1] * c * tb
    return float(s * z - reward)


def block_regret_of_run(instance: ProblemInstance, stats: RunStats) -> float:
    return block_regret(instance, stats.tilde_counts, stats.block_counts_by_basis, stats.m0)


def k_alpha(
    instance: ProblemInstance,
    family: FamilySpec,
    truth: Sequence,
    alpha: int,
    basis: Basis | None = None,
) -> float:
    """Minimal KL divergence that moves bandit alpha's mean strictly past
    phi_alpha + mu_alpha; family closed forms, discrete by KL projection.
    Returns +inf when the target mean is unreachable on the support."""
    if basis is None:
        basis = lp.solve_primal(instance).basis
    phi = float(lp.reduced_cost(basis, instance, alpha))
    return family.k_alpha(alpha, truth[alpha - 1], phi)


def set_D(
    instance: ProblemInstance,
    family: FamilySpec,
    truth: Sequence,
) -> set[int]:
    """Bandits outside every optimal basis whose inflated-mean target is
    achievable within the family's parameter set."""
    optimal = lp.enumerate_optimal_bases(instance)
    in_some = set()
    for b in optimal:
        in_some.update(b.bandit_ids)
    ref = lp.solve_primal(instance).basis
    out = set()
    for a in range(1, instance.k + 1):
        if a in in_some:
            continue
        phi = float(lp.reduced_cost(ref, instance, a))
        target = family.mean(a, truth[a - 1]) + phi
        if family.mean_reachable(a, target):
            out.add(a)
    return out


@dataclass(frozen=True)
class LowerBoundReport:
    z_star: float
    optimal_bases: tuple[tuple[int, ...], ...]
    D: tuple[int, ...]
    phi: dict[int, float]
    K: dict[int, float]
    M: float

    def to_dict(self) -> dict:
        return {
            "z_star": self.z_star,
            "optimal_bases": [list(b) for b in self.optimal_bases],
            "D": list(self.D),
            "phi": {str(a): v for a, v in self.phi.items()},
            "K": {str(a): v for a, v in self.K.items()},
            "M": self.M,
        }


def lower_bound_M(
    instance: ProblemInstance,
    family: FamilySpec,
    truth: Sequence,
) -> LowerBoundReport:
    """Asymptotic lower bound on regret per log n: sum over the bandit set D
    of reduced cost over minimal KL divergence."""
    solution = lp.solve_primal(instance)
    optimal = sorted(lp.enumerate_optimal_bases(instance), key=lambda b: b.sort_key())
    d_set = sorted(set_D(instance, family, truth))
    phi: dict[int, float] = {}
    kvals: dict[int, float] = {}
    for a in d_set:
        values = {lp.reduced_cost(b, instance, a) for b in optimal}
        if len(values) > 1:
            raise AmbiguousPhi(
                f"bandit {a} has basis-dependent reduced costs {sorted(values)} "
                "across the optimal bases"
            )
        phi_a = values.pop()
        phi[a] = float(phi_a)
        kvals[a] = family.k_alpha(a, truth[a - 1], float(phi_a))
    m = sum(phi[a] / kvals[a] for a in d_set if kvals[a] > 0)
    return LowerBoundReport(
        z_star=float(solution.z_star),
        optimal_bases=tuple(b.bandit_ids for b in optimal),
        D=tuple(d_set),
        phi=phi,
        K=kvals,
        M=float(m),
    )


def spearman_rho(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation (average ranks on ties)."""
    def ranks(vals):
        order = sorted(range(len(vals)), key=lambda i: vals[i])
        r = [0.0] * len(vals)
        i = 0
        while i < len(order):
            j = i
            while j + 1 < len(order) and vals[order[j + 1]] == vals[order[i]]:
                j += 1
            avg = (i + j) / 2.0 + 1.0
            for t in range(i, j + 1):
                r[order[t]] = avg
            i = j + 1
        return r

    rx, ry = ranks(list(xs)), ranks(list(ys))
    mx = sum(rx) / len(rx)
    my = sum(ry) / len(ry)
    num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    den = math.sqrt(
        sum((a - mx) ** 2 for a in rx) * sum((b - my) ** 2 for b in ry)
    )
    return num / den if den else 0.0
