"""Exact rational-arithmetic solution of the activation linear program.

The LP maximises the expected per-period reward over randomized activation
probabilities ``x_i`` subject to ``L`` resource-rate constraints
``sum_i c^i_j x_i + y_j = c^0_j`` and the convexity constraint
``sum_i x_i = 1``.  Everything here runs on :class:`fractions.Fraction`
so that block lengths (least common denominators of the ``x_i``) and dual
signs are certified, not approximated.

Bandit ids are 1-based throughout, matching the relabeling convention in
which bandit 1 has strictly sub-rate costs on every resource.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence


class LpError(Exception):
    pass


class InfeasibleInstance(LpError):
    """The LP feasible region is empty (cannot occur for valid instances)."""


class SingularBasis(LpError):
    """The chosen basic matrix is not invertible."""


class NonRationalProbabilities(LpError):
    """Activation probabilities are not exact rationals."""


def to_fraction(value) -> Fraction:
    """Convert an int, decimal string, fraction string, float or Fraction
    to an exact Fraction.  Floats convert to their exact binary value."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(value)
    raise TypeError(f"cannot convert {type(value).__name__} to Fraction")


def _solve_linear(rows: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction] | None:
    """Solve a square rational system by Gaussian elimination.

    Returns None when the matrix is singular.
    """
    n = len(rows)
    a = [list(rows[i]) + [rhs[i]] for i in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            return None
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
        inv = a[col][col]
        a[col] = [v / inv for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [v - f * p for v, p in zip(a[r], a[col])]
    return [a[i][n] for i in range(n)]


@dataclass(frozen=True)
class ProblemInstance:
    """Cost data and means for the activation problem.

    costs[i][j] is the type-j cost of activating bandit i+1; rates[j] is the
    per-period replenishment of resource j+1.  Means may be exact truth values
    or float-derived estimates, depending on the caller.
    """

    k: int
    L: int
    costs: tuple[tuple[Fraction, ...], ...]
    rates: tuple[Fraction, ...]
    means: tuple[Fraction, ...]

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("need at least two bandits")
        if not (1 <= self.L < self.k):
            raise ValueError("require 1 <= L < k")
        if len(self.costs) != self.k or any(len(row) != self.L for row in self.costs):
            raise ValueError("costs must be a k x L matrix")
        if len(self.rates) != self.L:
            raise ValueError("rates must have length L")
        if len(self.means) != self.k:
            raise ValueError("means must have length k")
        for j in range(self.L):
            if not self.costs[0][j] < self.rates[j]:
                raise ValueError(
                    f"bandit 1 must have cost < rate on every resource (resource {j + 1})"
                )
            for i in range(self.k):
                if self.costs[i][j] == self.rates[j]:
                    raise ValueError(
                        f"bandit {i + 1} has cost equal to the rate on resource {j + 1}"
                    )
        if not any(self.costs[self.k - 1][j] > self.rates[j] for j in range(self.L)):
            raise ValueError("bandit k must exceed the rate on at least one resource")
        for i, m in enumerate(self.means):
            if not m > 0:
                raise ValueError(f"mean of bandit {i + 1} must be positive")

    @classmethod
    def build(cls, costs, rates, means) -> "ProblemInstance":
        costs_f = tuple(tuple(to_fraction(v) for v in row) for row in costs)
        rates_f = tuple(to_fraction(v) for v in rates)
        means_f = tuple(to_fraction(v) for v in means)
        return cls(len(costs_f), len(rates_f), costs_f, rates_f, means_f)

    def with_means(self, means) -> "ProblemInstance":
        return ProblemInstance(
            self.k, self.L, self.costs, self.rates,
            tuple(to_fraction(v) for v in means),
        )

    def delta(self, bandit: int, resource: int) -> Fraction:
        """Net drain of one activation of `bandit` on `resource` (1-based)."""
        return self.costs[bandit - 1][resource - 1] - self.rates[resource - 1]


@dataclass(frozen=True)
class Basis:
    """A basic matrix choice: bandit columns plus slack columns, L+1 total."""

    bandit_ids: tuple[int, ...]
    slack_ids: tuple[int, ...]

    def __post_init__(self):
        if not self.bandit_ids:
            raise ValueError("basis must contain at least one bandit")
        if tuple(sorted(self.bandit_ids)) != self.bandit_ids:
            raise ValueError("bandit_ids must be sorted")
        if tuple(sorted(self.slack_ids)) != self.slack_ids:
            raise ValueError("slack_ids must be sorted")

    @property
    def size(self) -> int:
        return len(self.bandit_ids) + len(self.slack_ids)

    def sort_key(self):
        return (self.bandit_ids, self.slack_ids)


@dataclass(frozen=True)
class LpSolution:
    basis: Basis
    x: tuple[Fraction, ...]
    slack: tuple[Fraction, ...]
    z_star: Fraction
    dual: tuple[Fraction, ...]
    reduced_costs: tuple[Fraction, ...]
    unique: bool
    degenerate: bool


@dataclass(frozen=True)
class ReducedCostWeights:
    """Weights w with phi_alpha = w . means, independent of the means."""

    weights: tuple[Fraction, ...]

    def evaluate(self, means: Sequence[Fraction]) -> Fraction:
        return sum((w * m for w, m in zip(self.weights, means)), Fraction(0))


def _basis_matrix(basis: Basis, instance: ProblemInstance) -> list[list[Fraction]]:
    """Rows: L resource constraints then the convexity row; columns follow
    basis order (bandits first, then slacks)."""
    L = instance.L
    cols = []
    for i in basis.bandit_ids:
        cols.append([instance.costs[i - 1][j] for j in range(L)] + [Fraction(1)])
    for j in basis.slack_ids:
        col = [Fraction(0)] * (L + 1)
        col[j - 1] = Fraction(1)
        cols.append(col)
    return [[cols[c][r] for c in range(len(cols))] for r in range(L + 1)]


def basic_solution(basis: Basis, instance: ProblemInstance) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]] | None:
    """Return (x, slack) full-length vectors for the BFS of `basis`, or None
    if the basic matrix is singular."""
    if basis.size != instance.L + 1:
        raise ValueError("basis must have L+1 columns")
    rows = _basis_matrix(basis, instance)
    rhs = [instance.rates[j] for j in range(instance.L)] + [Fraction(1)]
    beta = _solve_linear(rows, rhs)
    if beta is None:
        return None
    x = [Fraction(0)] * instance.k
    y = [Fraction(0)] * instance.L
    nb = len(basis.bandit_ids)
    for pos, i in enumerate(basis.bandit_ids):
        x[i - 1] = beta[pos]
    for pos, j in enumerate(basis.slack_ids):
        y[j - 1] = beta[nb + pos]
    return tuple(x), tuple(y)


def dual_vector(basis: Basis, instance: ProblemInstance) -> tuple[Fraction, ...]:
    """Exact dual vector (g_1..g_L, g_{L+1}) solving g.B = mu_B."""
    rows = _basis_matrix(basis, instance)
    n = len(rows)
    transposed = [[rows[r][c] for r in range(n)] for c in range(n)]
    mu_b = [instance.means[i - 1] for i in basis.bandit_ids]
    mu_b += [Fraction(0)] * len(basis.slack_ids)
    g = _solve_linear(transposed, mu_b)
    if g is None:
        raise SingularBasis(f"basis {basis} is singular")
    return tuple(g)


def reduced_cost(basis: Basis, instance: ProblemInstance, alpha: int) -> Fraction:
    """phi^B_alpha = c^alpha . g[:L] + g[L] - mu_alpha; zero for basic alpha."""
    g = dual_vector(basis, instance)
    return _reduced_cost_from_dual(g, instance, alpha)


def _reduced_cost_from_dual(g: Sequence[Fraction], instance: ProblemInstance, alpha: int) -> Fraction:
    total = g[instance.L]
    for j in range(instance.L):
        total += instance.costs[alpha - 1][j] * g[j]
    return total - instance.means[alpha - 1]


def reduced_cost_weights(basis: Basis, instance: ProblemInstance, alpha: int) -> ReducedCostWeights:
    """Express phi^B_alpha as a linear functional of the means vector.

    With h = B^{-1} A_alpha (A_alpha the column of bandit alpha), the dual
    identity gives phi_alpha = sum over basic bandit positions of
    mu_{i_p} h_p minus mu_alpha, so the weights depend only on cost data.
    """
    rows = _basis_matrix(basis, instance)
    col = [instance.costs[alpha - 1][j] for j in range(instance.L)] + [Fraction(1)]
    h = _solve_linear(rows, col)
    if h is None:
        raise SingularBasis(f"basis {basis} is singular")
    w = [Fraction(0)] * instance.k
    for pos, i in enumerate(basis.bandit_ids):
        w[i - 1] += h[pos]
    w[alpha - 1] -= 1
    return ReducedCostWeights(tuple(w))


def _candidate_bases(k: int, L: int) -> Iterable[Basis]:
    columns = list(range(1, k + 1)) + [-j for j in range(1, L + 1)]
    for combo in combinations(columns, L + 1):
        bandits = tuple(sorted(c for c in combo if c > 0))
        slacks = tuple(sorted(-c for c in combo if c < 0))
        if bandits:
            yield Basis(bandits, slacks)


def feasible_bases(instance: ProblemInstance) -> list[tuple[Basis, tuple[Fraction, ...], tuple[Fraction, ...]]]:
    """All (basis, x, slack) triples with a nonsingular, feasible BFS."""
    out = []
    for basis in _candidate_bases(instance.k, instance.L):
        sol = basic_solution(basis, instance)
        if sol is None:
            continue
        x, y = sol
        if all(v >= 0 for v in x) and all(v >= 0 for v in y):
            out.append((basis, x, y))
    return out


def _objective(x: Sequence[Fraction], instance: ProblemInstance) -> Fraction:
    return sum((m * v for m, v in zip(instance.means, x)), Fraction(0))


def _finish_solution(basis: Basis, x, y, instance: ProblemInstance) -> LpSolution:
    g = dual_vector(basis, instance)
    phis = tuple(_reduced_cost_from_dual(g, instance, a) for a in range(1, instance.k + 1))
    basic_set = set(basis.bandit_ids)
    slack_set = set(basis.slack_ids)
    degenerate = any(x[i - 1] == 0 for i in basis.bandit_ids) or any(
        y[j - 1] == 0 for j in basis.slack_ids
    )
    zero_nonbasic = any(
        phis[a - 1] == 0 for a in range(1, instance.k + 1) if a not in basic_set
    ) or any(g[j - 1] == 0 for j in range(1, instance.L + 1) if j not in slack_set)
    return LpSolution(
        basis=basis,
        x=x,
        slack=y,
        z_star=_objective(x, instance),
        dual=g,
        reduced_costs=phis,
        unique=not (zero_nonbasic or degenerate),
        degenerate=degenerate,
    )


def solve_primal(instance: ProblemInstance) -> LpSolution:
    """Optimal BFS by exhaustive basis enumeration, exact throughout.

    Ties among equally optimal bases break to the lexicographically smallest
    (bandit_ids, slack_ids) pair so results are deterministic.
    """
    best = None
    best_z = None
    for basis, x, y in feasible_bases(instance):
        z = _objective(x, instance)
        if best is None or z > best_z or (z == best_z and basis.sort_key() < best[0].sort_key()):
            best = (basis, x, y)
            best_z = z
    if best is None:
        raise InfeasibleInstance("no feasible basis exists")
    return _finish_solution(*best, instance)


def enumerate_optimal_bases(instance: ProblemInstance) -> set[Basis]:
    """Exactly the bases whose BFS attains z*, by full enumeration."""
    triples = feasible_bases(instance)
    if not triples:
        raise InfeasibleInstance("no feasible basis exists")
    z_star = max(_objective(x, instance) for _, x, _ in triples)
    return {basis for basis, x, _ in triples if _objective(x, instance) == z_star}


def optimal_bandit_sets(instance: ProblemInstance) -> set[tuple[int, ...]]:
    """Bandit-id sets of the optimal bases (a basis is identified by its
    bandit variables; slack columns are implied)."""
    return {b.bandit_ids for b in enumerate_optimal_bases(instance)}


def solve_simplex(instance: ProblemInstance) -> LpSolution:
    """Bland-rule primal simplex over exact rationals.

    Alternative path to :func:`solve_primal` for larger k; the two must agree
    on z*.  Starts from the feasible basis {bandit 1} + all slacks, which the
    instance invariants guarantee is strictly feasible.
    """
    k, L = instance.k, instance.L
    # Column order: bandits 1..k then slacks 1..L; ids 0..k+L-1.
    ncols = k + L

    def column(c: int) -> list[Fraction]:
        if c < k:
            return [instance.costs[c][j] for j in range(L)] + [Fraction(1)]
        col = [Fraction(0)] * (L + 1)
        col[c - k] = Fraction(1)
        return col

    obj = [instance.means[c] if c < k else Fraction(0) for c in range(ncols)]
    basis_cols = [0] + [k + j for j in range(L)]
    # Tableau: rows of B^{-1}A | B^{-1}b.
    rows = [[column(c)[r] for c in range(ncols)] for r in range(L + 1)]
    rhs = [instance.rates[j] for j in range(L)] + [Fraction(1)]
    tab = [rows[r] + [rhs[r]] for r in range(L + 1)]
    # Reduce to the starting basis (identity on basis columns).
    for pos, bc in enumerate(basis_cols):
        pivot = next(r for r in range(pos, L + 1) if tab[r][bc] != 0)
        tab[pos], tab[pivot] = tab[pivot], tab[pos]
        inv = tab[pos][bc]
        tab[pos] = [v / inv for v in tab[pos]]
        for r in range(L + 1):
            if r != pos and tab[r][bc] != 0:
                f = tab[r][bc]
                tab[r] = [v - f * p for v, p in zip(tab[r], tab[pos])]

    while True:
        cb = [obj[c] for c in basis_cols]
        entering = None
        for c in range(ncols):
            if c in basis_cols:
                continue
            red = sum(cb[r] * tab[r][c] for r in range(L + 1)) - obj[c]
            if red < 0:
                entering = c
                break
        if entering is None:
            break
        leaving_pos = None
        best_ratio = None
        for r in range(L + 1):
            if tab[r][entering] > 0:
                ratio = tab[r][ncols] / tab[r][entering]
                if best_ratio is None or ratio < best_ratio or (
                    ratio == best_ratio and basis_cols[r] < basis_cols[leaving_pos]
                ):
                    best_ratio = ratio
                    leaving_pos = r
        if leaving_pos is None:
            raise InfeasibleInstance("unbounded LP; instance invariants violated")
        inv = tab[leaving_pos][entering]
        tab[leaving_pos] = [v / inv for v in tab[leaving_pos]]
        for r in range(L + 1):
            if r != leaving_pos and tab[r][entering] != 0:
                f = tab[r][entering]
                tab[r] = [v - f * p for v, p in zip(tab[r], tab[leaving_pos])]
        basis_cols[leaving_pos] = entering

    bandits = tuple(sorted(c + 1 for c in basis_cols if c < k))
    slacks = tuple(sorted(c - k + 1 for c in basis_cols if c >= k))
    basis = Basis(bandits, slacks)
    x, y = basic_solution(basis, instance)
    return _finish_solution(basis, x, y, instance)


def block_composition(solution: LpSolution) -> tuple[dict[int, int], int]:
    """Integer activation counts realizing the basis randomization exactly.

    The block length X(b) is the least common multiple of the denominators of
    the basic x_l in lowest terms; m_l = x_l * X(b).  Singleton bases give a
    length-1 block.
    """
    counts: dict[int, int] = {}
    denoms = []
    for i in solution.basis.bandit_ids:
        xi = solution.x[i - 1]
        if not isinstance(xi, Fraction):
            raise NonRationalProbabilities(f"x_{i} is {type(xi).__name__}, not Fraction")
        denoms.append(xi.denominator)
    length = math.lcm(*denoms)
    for i in solution.basis.bandit_ids:
        m = solution.x[i - 1] * length
        counts[i] = int(m)
    return counts, length
