"""Augustin information, capacities and cost-constrained capacities for finite channels."""

from .augustin_mean import (
    AugustinSolution,
    ConvergenceError,
    al_information,
    augustin_information,
    augustin_operator,
    renyi_information,
    renyi_mean,
    rg_information,
    solve_augustin_mean,
)
from .capacity_solvers import (
    BoundaryConstraintError,
    CapacityResult,
    InfeasibleConstraintError,
    al_capacity,
    al_capacity_direct,
    augustin_capacity_unconstrained,
    brute_force_capacity,
    capacity_cost_curve,
    capacity_lambda_curve,
    capacity_order_curve,
    cost_allocation_capacity,
    cost_constrained_capacities,
    cost_constrained_capacity,
    rg_capacity,
)
from .core_model import (
    Channel,
    CostSpec,
    Order,
    Prob,
    ValidationError,
    bsc,
    identity_channel,
    product_channel,
)
from .renyi_divergence import DivergenceValue, conditional_divergence, renyi_divergence, tilted_measure

__all__ = [
    "AugustinSolution",
    "BoundaryConstraintError",
    "CapacityResult",
    "Channel",
    "ConvergenceError",
    "CostSpec",
    "DivergenceValue",
    "InfeasibleConstraintError",
    "Order",
    "Prob",
    "ValidationError",
    "al_capacity",
    "al_capacity_direct",
    "al_information",
    "augustin_capacity_unconstrained",
    "augustin_information",
    "augustin_operator",
    "brute_force_capacity",
    "bsc",
    "capacity_cost_curve",
    "capacity_lambda_curve",
    "capacity_order_curve",
    "conditional_divergence",
    "cost_allocation_capacity",
    "cost_constrained_capacities",
    "cost_constrained_capacity",
    "identity_channel",
    "product_channel",
    "renyi_divergence",
    "renyi_information",
    "renyi_mean",
    "rg_capacity",
    "rg_information",
    "solve_augustin_mean",
    "tilted_measure",
]
