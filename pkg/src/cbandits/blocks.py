"""Construction of activation blocks and prefix-feasible ordering.

An initial sampling block (ISB) gives every bandit at least ``n0`` samples
while keeping the budget feasible at every period; LP blocks execute a basic
feasible solution's randomization exactly via integer counts over the least
common denominator of its probabilities.

Ordering inside a block is artifact plumbing: blocks are feasible in
aggregate, and we search for a permutation every prefix of which keeps all
resource slacks nonnegative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .lp import Basis, LpSolution, ProblemInstance, block_composition


class InfeasibleIsb(Exception):
    """No feasible ordering for the initial sampling block (should not occur
    when bandit 1 has strictly negative net drain on every resource)."""


class InfeasibleOrdering(Exception):
    """Backtracking exhausted every permutation (or hit the search cap)
    without finding a prefix-feasible order."""


_SEARCH_NODE_CAP = 10 ** 6


@dataclass(frozen=True)
class BlockSchedule:
    """An ordered, feasible group of activations."""

    kind: str  # "isb" or "lpb"
    basis: Basis | None
    activations: tuple[int, ...]
    counts: dict[int, int]
    length: int

    def __post_init__(self):
        assert self.length == len(self.activations) == sum(self.counts.values())


def order_block(
    counts: Mapping[int, int],
    instance: ProblemInstance,
    starting_slack: Sequence[Fraction] | None = None,
) -> tuple[int, ...]:
    """Prefix-feasible permutation of the multiset given by `counts`.

    Greedy choice of the remaining bandit maximizing the minimum
    post-activation slack, smallest bandit id on ties, with full backtracking
    behind it.  Raises InfeasibleOrdering when the search is exhausted or
    exceeds the node cap.
    """
    L = instance.L
    slack = list(starting_slack) if starting_slack is not None else [Fraction(0)] * L
    if len(slack) != L:
        raise ValueError("starting_slack must have length L")
    remaining = {b: int(c) for b, c in counts.items() if c > 0}
    total = sum(remaining.values())
    order: list[int] = []
    nodes = 0
    # Per-bandit slack increments: rate_j - cost_j.
    gain = {
        b: [instance.rates[j] - instance.costs[b - 1][j] for j in range(L)]
        for b in remaining
    }

    def feasible_moves() -> list[tuple[int, list[Fraction]]]:
        moves = []
        for b, c in remaining.items():
            if c == 0:
                continue
            new_slack = [s + g for s, g in zip(slack, gain[b])]
            if all(v >= 0 for v in new_slack):
                moves.append((min(new_slack) if new_slack else Fraction(0), b, new_slack))
        moves.sort(key=lambda t: (-t[0], t[1]))
        return [(b, ns) for _, b, ns in moves]

    # Iterative depth-first search; recursion would overflow on long blocks.
    # Invariant: stack[d] holds the untried moves for position d, and
    # depth_slacks[d] is the slack after the first d placed activations.
    stack: list[tuple[list, int]] = [(feasible_moves(), 0)]
    depth_slacks: list[list[Fraction]] = [slack[:]]
    while stack:
        if len(order) == total:
            return tuple(order)
        moves, idx = stack[-1]
        if idx == len(moves):
            stack.pop()
            depth_slacks.pop()
            if order:
                remaining[order.pop()] += 1
                slack[:] = depth_slacks[-1]
            continue
        stack[-1] = (moves, idx + 1)
        nodes += 1
        if nodes > _SEARCH_NODE_CAP:
            raise InfeasibleOrdering("search node cap exceeded")
        b, new_slack = moves[idx]
        slack[:] = new_slack
        remaining[b] -= 1
        order.append(b)
        stack.append((feasible_moves(), 0))
        depth_slacks.append(new_slack[:])
    raise InfeasibleOrdering(
        f"no prefix-feasible order for counts {dict(counts)} from slack {list(slack)}"
    )


def isb_base_counts(instance: ProblemInstance) -> dict[int, int]:
    """One round of the initial pattern: bandit 1 activated y^1_* times and
    every other bandit once, with y^1_* the smallest replication count that
    makes the pattern feasible in aggregate on every resource."""
    y_star = 1
    for j in range(1, instance.L + 1):
        d1 = instance.delta(1, j)
        assert d1 < 0  # instance invariant: bandit 1 is sub-rate everywhere
        others = sum(instance.delta(i, j) for i in range(2, instance.k + 1))
        if others > 0:
            y_j = math.ceil(others / (-d1))
            y_star = max(y_star, y_j)
    return {1: y_star, **{i: 1 for i in range(2, instance.k + 1)}}


def build_isb(instance: ProblemInstance, n0: int = 1) -> BlockSchedule:
    """Initial sampling block: the base pattern ordered from zero slack and
    repeated n0 times, giving every bandit at least n0 samples."""
    if n0 < 1:
        raise ValueError("n0 must be >= 1")
    base = isb_base_counts(instance)
    try:
        base_order = order_block(base, instance)
    except InfeasibleOrdering as exc:  # pragma: no cover - excluded by invariants
        raise InfeasibleIsb(str(exc)) from exc
    activations = base_order * n0
    counts = {b: c * n0 for b, c in base.items()}
    return BlockSchedule(
        kind="isb",
        basis=None,
        activations=activations,
        counts=counts,
        length=len(activations),
    )


def build_lpb(
    solution: LpSolution,
    instance: ProblemInstance,
    ledger_slack: Sequence[Fraction] | None = None,
) -> BlockSchedule:
    """LP block for the solution's basis: integer counts over the least
    common denominator, ordered assuming zero starting slack.

    If no zero-slack ordering exists and the caller supplies the current
    ledger surplus, a slack-aware ordering is attempted before giving up.
    """
    counts, length = block_composition(solution)
    try:
        activations = order_block(counts, instance)
    except InfeasibleOrdering:
        if ledger_slack is None:
            raise
        activations = order_block(counts, instance, starting_slack=ledger_slack)
    return BlockSchedule(
        kind="lpb",
        basis=solution.basis,
        activations=activations,
        counts=dict(counts),
        length=length,
    )
