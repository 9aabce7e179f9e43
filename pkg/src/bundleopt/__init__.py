"""Optimal-bundling toolkit: demand analysis, nested-menu solver, LP verification."""

from .demand import (
    DemandProfile,
    compute_profile,
    compute_profiles,
    demand_price,
    elasticity,
    marginal_profit,
    profit_curve,
    sales_volume,
)
from .dominance import (
    DominanceRelation,
    build_dominance,
    check_menu_optimality,
    check_union_elasticity,
    elasticity_menu,
    to_dot,
)
from .menu import (
    CrossingRecord,
    MechanismSolution,
    NestedMenu,
    NestingError,
    best_nested_menu,
    envelope_allocation,
    evaluate_menu,
    last_crossing,
    relaxed_bound,
    solve_nested_menu,
    virtual_surplus,
)
from .model import (
    MonomialSum,
    ProblemSpec,
    SpecError,
    TypeDistribution,
    ValidationReport,
    format_bundle,
    load_spec,
    validate_assumptions,
)

__all__ = [
    "DemandProfile",
    "DominanceRelation",
    "CrossingRecord",
    "MechanismSolution",
    "MonomialSum",
    "NestedMenu",
    "NestingError",
    "ProblemSpec",
    "SpecError",
    "TypeDistribution",
    "ValidationReport",
    "best_nested_menu",
    "build_dominance",
    "check_menu_optimality",
    "check_union_elasticity",
    "compute_profile",
    "compute_profiles",
    "demand_price",
    "elasticity",
    "elasticity_menu",
    "envelope_allocation",
    "evaluate_menu",
    "format_bundle",
    "last_crossing",
    "load_spec",
    "marginal_profit",
    "profit_curve",
    "relaxed_bound",
    "sales_volume",
    "solve_nested_menu",
    "to_dot",
    "validate_assumptions",
    "virtual_surplus",
]

__version__ = "0.1.0"
