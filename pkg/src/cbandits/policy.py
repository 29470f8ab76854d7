"""The block UCB policy: sufficient statistics, KL-ball mean inflation,
the candidate set, the index, block selection, and the simulation loop.

The policy runs one initial sampling block, then repeatedly (a) solves the
activation LP on the current estimates, (b) inflates each bandit's mean to
the boundary of its KL confidence ball, (c) re-solves the LP with one
inflated mean at a time for the candidate bandits, and (d) executes the LP
block of the basis with the best inflated objective.  Estimates refresh only
at block boundaries.

``run_policy`` drives everything through a per-instance cache of the
feasible bases (their exact probabilities, compositions and orderings are
computed once); objective comparisons inside the loop are done in floats,
which is exact enough to pick argmax bases deterministically, while all
feasibility bookkeeping stays rational via the environment ledger.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import lp
from .analysis import RunStats, CheckpointRow
from .blocks import BlockSchedule, build_isb, build_lpb, order_block
from .environment import EnvState
from .families import FamilySpec, InsufficientSamples, NormalUnknownVar, DiscreteFinite
from .lp import Basis, LpSolution, ProblemInstance


class HorizonTooShort(Exception):
    """The horizon cannot even accommodate the initial sampling block."""


DEFAULT_MEAN_FLOOR = 1e-6


@dataclass
class EstimatorState:
    """Per-bandit sufficient statistics: count, running sum and sum of
    squares, and (discrete family) support-value frequencies."""

    k: int
    family: FamilySpec
    counts: list[int] = field(default_factory=list)
    sums: list[float] = field(default_factory=list)
    sumsqs: list[float] = field(default_factory=list)
    freqs: list[dict[float, int]] | None = None

    def __post_init__(self):
        if not self.counts:
            self.counts = [0] * self.k
            self.sums = [0.0] * self.k
            self.sumsqs = [0.0] * self.k
        if isinstance(self.family, DiscreteFinite) and self.freqs is None:
            self.freqs = [dict.fromkeys(sup, 0) for sup in self.family.supports]

    def add(self, alpha: int, x: float) -> None:
        i = alpha - 1
        self.counts[i] += 1
        self.sums[i] += x
        self.sumsqs[i] += x * x
        if self.freqs is not None:
            self.freqs[i][x] += 1

    def params(self) -> tuple:
        """Current parameter estimates, one per bandit."""
        out = []
        for i in range(self.k):
            if self.counts[i] == 0:
                raise ValueError(f"bandit {i + 1} has no samples yet")
            freq = list(self.freqs[i].values()) if self.freqs is not None else None
            out.append(
                self.family.estimate(i + 1, self.counts[i], self.sums[i], self.sumsqs[i], freq)
            )
        return tuple(out)


@dataclass
class PolicyState:
    """Everything the policy consults at a block boundary."""

    family: FamilySpec
    estimators: EstimatorState
    l: int  # index of the block about to be chosen (ISB is block 1)
    S: int  # total length of completed blocks
    T: list[int]  # per-bandit activation counts over completed blocks
    theta_hat: tuple = ()  # estimates frozen at the last boundary
    tilde_counts: dict[Basis, int] = field(default_factory=dict)
    m0: dict[int, int] = field(default_factory=dict)

    def refresh_estimates(self) -> None:
        self.theta_hat = self.estimators.params()


@dataclass
class IndexReport:
    """Diagnostics for one block decision."""

    inflations: dict[int, float]
    phi: dict[int, float]
    candidate_set: set[int]
    inflated_means: dict[int, float]
    indices: dict[int, float]
    index_bases: dict[int, Basis]
    nonunique_indices: set[int]
    base_basis: Basis
    base_objective: float
    chosen: Basis


def floored_means(family: FamilySpec, theta_hat, floor: float = DEFAULT_MEAN_FLOOR) -> tuple[float, ...]:
    """Mean estimates floored at a small positive value so they remain
    admissible LP coefficients."""
    return tuple(
        max(family.mean(a + 1, th), floor) for a, th in enumerate(theta_hat)
    )


def inflation_v(alpha: int, state: PolicyState, family: FamilySpec) -> float:
    """Largest mean inside bandit alpha's KL confidence ball of radius
    log(S)/T.  Unknown-variance bandits with fewer than 3 samples get
    +inf (forced exploration)."""
    if state.S < 2:
        raise ValueError("need S >= 2 so that log S > 0")
    t = state.T[alpha - 1]
    if t < 1:
        raise ValueError(f"bandit {alpha} has no completed activations")
    try:
        return family.inflation(alpha, state.theta_hat[alpha - 1], state.S, t)
    except InsufficientSamples:
        return math.inf


def candidate_set_phi(
    state: PolicyState, solution: LpSolution, inflations: dict[int, float]
) -> set[int]:
    """Bandits whose inflated mean strictly exceeds phi_alpha + mu_hat_alpha
    under the estimate-optimal basis."""
    out = set()
    k = len(state.T)
    for alpha in range(1, k + 1):
        mu_star = float(solution.reduced_costs[alpha - 1]) + float(
            state.family.mean(alpha, state.theta_hat[alpha - 1])
        )
        if mu_star < inflations.get(alpha, -math.inf):
            out.add(alpha)
    return out


def index_u(
    alpha: int,
    state: PolicyState,
    family: FamilySpec,
    instance: ProblemInstance,
    mean_floor: float = DEFAULT_MEAN_FLOOR,
) -> tuple[float, Basis, bool]:
    """Exact-arithmetic index: replace bandit alpha's mean by the boundary of
    its KL ball, re-solve the LP, and return (objective, basis, unique)."""
    means = list(floored_means(family, state.theta_hat, mean_floor))
    v = inflation_v(alpha, state, family)
    if math.isinf(v):
        v = _forced_exploration_mean(means)
    means[alpha - 1] = max(v, means[alpha - 1])
    sol = lp.solve_primal(instance.with_means(means))
    return float(sol.z_star), sol.basis, sol.unique


def _forced_exploration_mean(means) -> float:
    # Finite stand-in for an unbounded inflation; dominates every objective.
    return 1e9 * (1.0 + max(means))


def choose_block(
    state: PolicyState,
    family: FamilySpec,
    instance: ProblemInstance,
    mean_floor: float = DEFAULT_MEAN_FLOOR,
) -> tuple[Basis, IndexReport]:
    """Reference (exact LP) block selection for the current state."""
    means = floored_means(family, state.theta_hat, mean_floor)
    base = lp.solve_primal(instance.with_means(means))
    inflations = {
        a: inflation_v(a, state, family) for a in range(1, instance.k + 1)
    }
    phi_set = candidate_set_phi(state, base, inflations)
    indices: dict[int, float] = {}
    bases: dict[int, Basis] = {}
    nonunique: set[int] = set()
    inflated: dict[int, float] = {}
    for a in sorted(phi_set):
        u, b, uniq = index_u(a, state, family, instance, mean_floor)
        indices[a] = u
        bases[a] = b
        if not uniq:
            nonunique.add(a)
        inflated[a] = inflations[a]
    if phi_set:
        # argmax with ties to the smallest bandit id, then its basis.
        best_u = max(indices.values())
        best = min(a for a in indices if indices[a] == best_u)
        chosen = bases[best]
    else:
        chosen = base.basis
    report = IndexReport(
        inflations=inflations,
        phi={a: float(base.reduced_costs[a - 1]) for a in range(1, instance.k + 1)},
        candidate_set=phi_set,
        inflated_means=inflated,
        indices=indices,
        index_bases=bases,
        nonunique_indices=nonunique,
        base_basis=base.basis,
        base_objective=float(base.z_star),
        chosen=chosen,
    )
    return chosen, report


# ---------------------------------------------------------------------------
# Fast per-instance engine used by run_policy
# ---------------------------------------------------------------------------


class _BasisCache:
    """Feasible bases of an instance with everything the loop needs:
    float probabilities for objective comparisons, exact compositions and
    prefix-feasible orderings computed on demand."""

    def __init__(self, instance: ProblemInstance):
        self.instance = instance
        triples = sorted(lp.feasible_bases(instance), key=lambda t: t[0].sort_key())
        if not triples:
            raise lp.InfeasibleInstance("no feasible basis")
        self.entries = []
        for basis, x, y in triples:
            support = [(i - 1, float(x[i - 1])) for i in basis.bandit_ids]
            weights = [
                tuple(float(w) for w in lp.reduced_cost_weights(basis, instance, a).weights)
                for a in range(1, instance.k + 1)
            ]
            self.entries.append({
                "basis": basis,
                "x": x,
                "support": support,
                "weights": weights,
            })
        self._schedules: dict[Basis, BlockSchedule] = {}

    def argmax(self, means: list[float]) -> tuple[int, float]:
        """Index and objective of the best basis; first (lexicographically
        smallest) basis wins exact ties."""
        best_i = 0
        best_z = -math.inf
        for i, e in enumerate(self.entries):
            z = sum(w * means[j] for j, w in e["support"])
            if z > best_z:
                best_z = z
                best_i = i
        return best_i, best_z

    def phi(self, entry_index: int, means: list[float]) -> list[float]:
        weights = self.entries[entry_index]["weights"]
        return [sum(w * m for w, m in zip(wa, means)) for wa in weights]

    def schedule(self, entry_index: int) -> BlockSchedule:
        basis = self.entries[entry_index]["basis"]
        sched = self._schedules.get(basis)
        if sched is None:
            counts, length = lp.block_composition(
                lp.LpSolution(
                    basis=basis,
                    x=self.entries[entry_index]["x"],
                    slack=(),
                    z_star=Fraction(0),
                    dual=(),
                    reduced_costs=(),
                    unique=False,
                    degenerate=False,
                )
            )
            activations = order_block(counts, self.instance)
            sched = BlockSchedule(
                kind="lpb",
                basis=basis,
                activations=activations,
                counts=dict(counts),
                length=length,
            )
            self._schedules[basis] = sched
        return sched


def _fast_choose(
    cache: _BasisCache,
    state: PolicyState,
    family: FamilySpec,
    mean_floor: float,
) -> int:
    """Float-arithmetic replica of choose_block over the cached bases;
    returns the cache index of the chosen basis."""
    k = cache.instance.k
    means = list(floored_means(family, state.theta_hat, mean_floor))
    base_i, _ = cache.argmax(means)
    phis = cache.phi(base_i, means)
    best_u = -math.inf
    best_entry = base_i
    for a in range(1, k + 1):
        t = state.T[a - 1]
        try:
            v = family.inflation(a, state.theta_hat[a - 1], state.S, t)
        except InsufficientSamples:
            v = math.inf
        mu_star = phis[a - 1] + family.mean(a, state.theta_hat[a - 1])
        if not mu_star < v:
            continue
        v_eff = v if math.isfinite(v) else _forced_exploration_mean(means)
        old = means[a - 1]
        means[a - 1] = max(v_eff, old)
        cand_i, u = cache.argmax(means)
        means[a - 1] = old
        if u > best_u:
            best_u = u
            best_entry = cand_i
    return best_entry


@dataclass
class PolicyParams:
    n0: int = 1
    mean_floor: float = DEFAULT_MEAN_FLOOR


def run_policy(
    instance: ProblemInstance,
    family: FamilySpec,
    truth,
    horizon: int,
    seed: int,
    n0: int = 1,
    mean_floor: float = DEFAULT_MEAN_FLOOR,
    checkpoints: list[int] | None = None,
    check_identity_every_block: bool = False,
) -> RunStats:
    """Execute the policy for one replication.

    Runs the ISB, then chosen LP blocks until the next block would exceed the
    horizon; estimates update only at block boundaries.  Returns full
    trajectory counters; the budget ledger is enforced on every activation.
    """
    isb = build_isb(instance, n0)
    if horizon < isb.length:
        raise HorizonTooShort(
            f"horizon {horizon} is shorter than the initial block ({isb.length})"
        )
    env = EnvState.create(instance, family, truth, seed)
    est = EstimatorState(k=instance.k, family=family)
    state = PolicyState(family=family, estimators=est, l=1, S=0, T=[0] * instance.k)
    state.m0 = dict(isb.counts)

    checkpoint_queue = sorted(set(checkpoints)) if checkpoints else []
    cp_pos = 0
    rows: list[CheckpointRow] = []
    basis_counts: dict[Basis, dict[int, int]] = {}

    def execute(schedule: BlockSchedule) -> None:
        for a in schedule.activations:
            x = env.activate(a)
            est.add(a, x)
        for a, c in schedule.counts.items():
            state.T[a - 1] += c
        state.S += schedule.length
        if schedule.basis is not None:
            state.tilde_counts[schedule.basis] = state.tilde_counts.get(schedule.basis, 0) + 1
            basis_counts[schedule.basis] = dict(schedule.counts)
        state.l += 1

    def record_checkpoints() -> None:
        nonlocal cp_pos
        while cp_pos < len(checkpoint_queue) and checkpoint_queue[cp_pos] <= state.S:
            rows.append(
                CheckpointRow(
                    n=state.S,
                    T=tuple(state.T),
                    spent=tuple(env.ledger.spent),
                    reward=env.total_reward,
                    blocks_completed=state.l - 1,
                )
            )
            cp_pos += 1

    execute(isb)
    state.refresh_estimates()
    record_checkpoints()

    cache = _BasisCache(instance)
    while True:
        entry = _fast_choose(cache, state, family, mean_floor)
        schedule = cache.schedule(entry)
        if state.S + schedule.length > horizon:
            break
        execute(schedule)
        if check_identity_every_block:
            check_counting_identity(state.T, state.tilde_counts, basis_counts, state.m0)
        state.refresh_estimates()
        record_checkpoints()

    # Checkpoints past the last completed block map to the final boundary.
    while cp_pos < len(checkpoint_queue):
        rows.append(
            CheckpointRow(
                n=state.S,
                T=tuple(state.T),
                spent=tuple(env.ledger.spent),
                reward=env.total_reward,
                blocks_completed=state.l - 1,
            )
        )
        cp_pos += 1

    check_counting_identity(state.T, state.tilde_counts, basis_counts, state.m0)
    return RunStats(
        k=instance.k,
        L=instance.L,
        horizon=horizon,
        n_final=state.S,
        T=tuple(state.T),
        spent=tuple(env.ledger.spent),
        reward=env.total_reward,
        blocks_completed=state.l - 1,
        tilde_counts=dict(state.tilde_counts),
        m0=dict(state.m0),
        block_counts_by_basis=basis_counts,
        checkpoint_rows=rows,
    )


def check_counting_identity(
    T: list[int] | tuple[int, ...],
    tilde_counts: dict[Basis, int],
    basis_counts: dict[Basis, dict[int, int]],
    m0: dict[int, int],
) -> None:
    """Exact integer check that per-bandit activation totals decompose over
    the per-basis block tallies plus the initial block."""
    for a in range(1, len(T) + 1):
        total = m0.get(a, 0)
        for basis, tb in tilde_counts.items():
            total += tb * basis_counts[basis].get(a, 0)
        if total != T[a - 1]:
            raise AssertionError(
                f"block counting identity violated for bandit {a}: {total} != {T[a - 1]}"
            )
