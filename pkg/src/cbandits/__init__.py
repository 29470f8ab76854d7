"""Constrained multi-armed bandits with budget replenishment.

Exact LP/dual core, feasible block scheduling, the block-UCB policy for
Normal (known or unknown variance) and finite-support discrete reward
families, regret analysis with the asymptotic lower bound, and a simulation
harness exposed through a FastAPI service and CLI.
"""

from .analysis import (
    AmbiguousPhi,
    LowerBoundReport,
    NotOptimalBasis,
    RunStats,
    block_regret,
    k_alpha,
    lower_bound_M,
    pseudo_regret,
    regret_decomposition,
    set_D,
)
from .blocks import BlockSchedule, InfeasibleOrdering, build_isb, build_lpb, order_block
from .environment import (
    BudgetLedger,
    BudgetViolation,
    EnvState,
    InstanceSpec,
    load_instance,
    parse_instance,
)
from .families import (
    DiscreteFinite,
    DomainError,
    FamilySpec,
    InsufficientSamples,
    NormalKnownVar,
    NormalUnknownVar,
    kl_divergence,
    mean_of,
)
from .harness import ExperimentConfig, ResultBundle, run_experiment, write_bundle
from .lp import (
    Basis,
    InfeasibleInstance,
    LpSolution,
    ProblemInstance,
    ReducedCostWeights,
    SingularBasis,
    block_composition,
    dual_vector,
    enumerate_optimal_bases,
    reduced_cost,
    reduced_cost_weights,
    solve_primal,
    solve_simplex,
)
from .policy import (
    EstimatorState,
    HorizonTooShort,
    IndexReport,
    PolicyState,
    candidate_set_phi,
    choose_block,
    index_u,
    inflation_v,
    run_policy,
)

__all__ = [name for name in dir() if not name.startswith("_")]
