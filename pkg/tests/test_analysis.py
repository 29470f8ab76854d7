"""Regret accounting, the dual decomposition identity, the per-bandit KL
thresholds and the asymptotic lower bound."""

import math
import random
from fractions import Fraction

import pytest

from cbandits import (
    Basis,
    NotOptimalBasis,
    ProblemInstance,
    block_regret,
    k_alpha,
    lower_bound_M,
    pseudo_regret,
    regret_decomposition,
    set_D,
    solve_primal,
)
from cbandits.analysis import spearman_rho
from cbandits.families import DiscreteFinite, NormalKnownVar


# ---------------------------------------------------------------------------
# pseudo-regret
# ---------------------------------------------------------------------------


def test_pseudo_regret_singleton_zero():
    inst = ProblemInstance.build([[0], [2]], [1], [5, 1])
    assert pseudo_regret(inst, (10 ** 4, 0)) == 0.0


def test_pseudo_regret_instance_b(instance_b):
    assert pseudo_regret(instance_b, (5000, 4000, 1000)) == 500.0
    assert pseudo_regret(instance_b, (4000, 4000, 2000)) == pytest.approx(
        15000 - (4000 + 8000 + 3000)
    )


def test_pseudo_regret_optimal_proportions_zero(instance_b):
    assert pseudo_regret(instance_b, (5000, 5000, 0)) == 0.0


# ---------------------------------------------------------------------------
# decomposition
# ---------------------------------------------------------------------------


def test_decomposition_instance_b(instance_b):
    basis = solve_primal(instance_b).basis
    t1, t2 = regret_decomposition(instance_b, (5000, 4000, 1000), basis)
    assert t1 == 500.0
    assert t2 == 0.0


def test_decomposition_optimal_counts_zero(instance_b):
    basis = solve_primal(instance_b).basis
    t1, t2 = regret_decomposition(instance_b, (5000, 5000, 0), basis)
    assert (t1, t2) == (0.0, 0.0)


def test_decomposition_identity_random_feasible(instance_b):
    rng = random.Random(41)
    basis = solve_primal(instance_b).basis
    n = 1000
    done = 0
    while done < 200:
        b = rng.randint(0, n // 2)
        c = rng.randint(0, n // 2 - b)
        counts = (n - b - c, b, c)
        t1, t2 = regret_decomposition(instance_b, counts, basis, n)
        assert t1 >= 0 and t2 >= 0
        assert abs(pseudo_regret(instance_b, counts, n) - (t1 + t2)) <= 1e-9
        done += 1


def test_decomposition_rejects_nonoptimal_basis(instance_b):
    with pytest.raises(NotOptimalBasis):
        regret_decomposition(instance_b, (5000, 4000, 1000), Basis((1, 3), ()))


# ---------------------------------------------------------------------------
# block regret
# ---------------------------------------------------------------------------


def test_block_regret_optimal_blocks_zero(instance_b):
    basis = solve_primal(instance_b).basis
    r = block_regret(instance_b, {basis: 50}, {basis: {1: 1, 2: 1}}, m0={})
    assert r == 0.0


def test_block_regret_single_suboptimal_block(instance_b):
    b13 = Basis((1, 3), ())
    r = block_regret(instance_b, {b13: 1}, {b13: {1: 1, 3: 1}}, m0={})
    assert r == pytest.approx(0.5)  # (z* - (mu_1+mu_3)/2) * 2


def test_block_regret_matches_pseudo_regret_on_block_counts(instance_b):
    basis = solve_primal(instance_b).basis
    b13 = Basis((1, 3), ())
    tilde = {basis: 7, b13: 3}
    per_block = {basis: {1: 1, 2: 1}, b13: {1: 1, 3: 1}}
    m0 = {1: 2, 2: 1, 3: 1}
    counts = [0, 0, 0]
    for a, c in m0.items():
        counts[a - 1] += c
    for b, t in tilde.items():
        for a, c in per_block[b].items():
            counts[a - 1] += c * t
    got = block_regret(instance_b, tilde, per_block, m0)
    assert got == pytest.approx(pseudo_regret(instance_b, counts), abs=1e-12)


# ---------------------------------------------------------------------------
# K and D
# ---------------------------------------------------------------------------


def test_k_alpha_instance_b(instance_b, family_b, truth_b):
    assert k_alpha(instance_b, family_b, truth_b, 3) == pytest.approx(0.125, abs=1e-15)


def test_k_alpha_zero_phi(instance_b, family_b, truth_b):
    assert k_alpha(instance_b, family_b, truth_b, 1) == 0.0


def test_k_alpha_discrete_projection():
    inst = ProblemInstance.build(
        [[0], [2], [2]], [1], [Fraction(1, 2), Fraction(3, 4), Fraction(1, 2)]
    )
    fam = DiscreteFinite(supports=((0.0, 1.0),) * 3)
    truth = ((0.5, 0.5), (0.25, 0.75), (0.5, 0.5))
    # phi_3 = 1/4 under the optimal basis {1,2}; target mean 3/4
    phi = solve_primal(inst).reduced_costs[2]
    assert phi == Fraction(1, 4)
    want = 0.5 * math.log(0.5 / 0.25) + 0.5 * math.log(0.5 / 0.75)
    assert k_alpha(inst, fam, truth, 3) == pytest.approx(want, abs=1e-6)


def test_set_d(instance_a, instance_b, family_b, truth_b):
    assert set_D(instance_b, family_b, truth_b) == {3}
    fam_a = NormalKnownVar((1.0, 1.0))
    assert set_D(instance_a, fam_a, (1.0, 2.0)) == set()


def test_set_d_unreachable_discrete_target():
    # bandit 3's support tops out below mu*_3 = 2: excluded from D
    inst = ProblemInstance.build([[0], [2], [2]], [1], [1, 2, Fraction(3, 2)])
    fam = DiscreteFinite(supports=((0.0, 2.0), (0.0, 4.0), (0.0, 1.8)))
    truth = ((0.5, 0.5), (0.5, 0.5), (1.0 / 6.0, 5.0 / 6.0))
    assert set_D(inst, fam, truth) == set()


# ---------------------------------------------------------------------------
# lower bound
# ---------------------------------------------------------------------------


def test_lower_bound_instance_b(instance_b, family_b, truth_b):
    report = lower_bound_M(instance_b, family_b, truth_b)
    assert report.M == 4.0
    assert report.phi == {3: 0.5}
    assert report.K == {3: 0.125}
    assert report.D == (3,)
    assert report.optimal_bases == ((1, 2),)
    assert report.z_star == 1.5


def test_lower_bound_scales_with_sigma(instance_b, truth_b):
    fam = NormalKnownVar((1.0, 1.0, 2.0))
    assert lower_bound_M(instance_b, fam, truth_b).M == pytest.approx(16.0)


def test_lower_bound_empty_d_zero(instance_a):
    fam = NormalKnownVar((1.0, 1.0))
    report = lower_bound_M(instance_a, fam, (1.0, 2.0))
    assert report.D == ()
    assert report.M == 0.0


def test_lower_bound_invariant_under_outside_relabeling():
    # swapping two bandits that are both outside D leaves M unchanged
    inst1 = ProblemInstance.build([[0], [2], [2], [3]], [1], [1, 2, Fraction(3, 2), Fraction(5, 4)])
    inst2 = ProblemInstance.build([[0], [2], [3], [2]], [1], [1, 2, Fraction(5, 4), Fraction(3, 2)])
    fam = NormalKnownVar((1.0,) * 4)
    m1 = lower_bound_M(inst1, fam, (1.0, 2.0, 1.5, 1.25)).M
    m2 = lower_bound_M(inst2, fam, (1.0, 2.0, 1.25, 1.5)).M
    assert m1 == pytest.approx(m2, abs=1e-12)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def test_spearman_rho():
    assert spearman_rho([1, 2, 3, 4], [10, 20, 30, 40]) == 1.0
    assert spearman_rho([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0
    assert abs(spearman_rho([1, 2, 3, 4], [1, 1, 1, 1])) == 0.0
