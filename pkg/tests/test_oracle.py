"""Discretized LP oracle: objective benchmarks, IC/IR feasibility, verdicts."""

import numpy as np
import pytest

from bundleopt import (
    best_nested_menu,
    build_dominance,
    compute_profiles,
    evaluate_menu,
    load_spec,
    relaxed_bound,
    solve_nested_menu,
)
from bundleopt.oracle import (
    DiscretizedInstance,
    best_nested_discrete,
    compare,
    discrete_chain_profit,
    dump_lp_text,
    solve_lp,
)

from support import generate_clean_specs, single_item_doc, two_item_spec


def _single_item_instance(m=201):
    return DiscretizedInstance.from_spec(load_spec(single_item_doc()), m)


# ---------------------------------------------------------------------------
# discretization


def test_instance_quantile_midpoints():
    inst = _single_item_instance(11)
    assert inst.types[0] == pytest.approx(0.5 / 11)
    assert inst.types[-1] == pytest.approx(10.5 / 11)
    assert inst.weights.sum() == pytest.approx(1.0)


def test_instance_m_range_enforced():
    spec = load_spec(single_item_doc())
    with pytest.raises(ValueError):
        DiscretizedInstance.from_spec(spec, 5)
    with pytest.raises(ValueError):
        DiscretizedInstance.from_spec(spec, 1000)


# ---------------------------------------------------------------------------
# LP solution quality


def test_single_item_objective_benchmark():
    lp = solve_lp(_single_item_instance(201))
    assert lp.objective == pytest.approx(0.25, abs=0.005)
    assert not lp.stochastic


def test_zero_values_give_zero_objective():
    # constructed directly: the loader (rightly) refuses all-zero instances
    m = 21
    types = (np.arange(m) + 0.5) / m
    inst = DiscretizedInstance(
        n_items=1,
        types=types,
        weights=np.full(m, 1.0 / m),
        bundles=(0, 1),
        values=np.zeros((2, m)),
        costs=np.zeros(2),
        sellable=(1,),
    )
    lp = solve_lp(inst)
    assert lp.objective == pytest.approx(0.0, abs=1e-9)
    assert np.all(lp.payments <= 1e-9)


def test_lp_matches_menu_solver_under_nesting():
    spec = two_item_spec(1.0, 0.5)
    profiles = compute_profiles(spec)
    rel = build_dominance(spec, profiles)
    menu = solve_nested_menu(spec, profiles, rel)
    inst = DiscretizedInstance.from_spec(spec, 201)
    lp = solve_lp(inst)
    assert abs(lp.objective - menu.expected_profit) <= 0.01


def test_lp_solution_feasible():
    inst = _single_item_instance(101)
    lp = solve_lp(inst)
    util = lp.utilities(inst.values)
    assert np.min(util) >= -1e-7  # IR
    # IC: no type gains from taking another type's lottery and payment
    V = inst.values[list(lp.option_bundles)]
    for k in range(inst.m):
        gains = lp.allocation @ V[:, k] - lp.payments - util[k]
        assert np.max(gains) <= 1e-7
    assert np.all(lp.allocation.sum(axis=1) <= 1 + 1e-9)


def test_lp_dominates_every_menu_on_same_instance():
    spec = two_item_spec(0.7, 0.5)
    inst = DiscretizedInstance.from_spec(spec, 101)
    lp = solve_lp(inst)
    from bundleopt.menu import iter_chains

    for chain in iter_chains(spec.nonzero_bundles()):
        sol = evaluate_menu(
            spec, chain, types=inst.types, weights=inst.weights
        )
        assert lp.objective >= sol.expected_profit - 1e-7


def test_lp_below_relaxed_bound_at_moderate_scale():
    for spec, _profiles, _rel in generate_clean_specs(77, 4, grid_size=1025):
        inst = DiscretizedInstance.from_spec(spec, 101)
        lp = solve_lp(inst)
        assert lp.objective <= relaxed_bound(spec) + 5.0 / 101


def test_discretization_stability():
    for spec, _profiles, _rel in generate_clean_specs(78, 3, grid_size=1025):
        lp101 = solve_lp(DiscretizedInstance.from_spec(spec, 101)).objective
        lp201 = solve_lp(DiscretizedInstance.from_spec(spec, 201)).objective
        assert abs(lp201 - lp101) <= 10.0 / 101


# ---------------------------------------------------------------------------
# discrete nested benchmark and verdicts


def test_discrete_chain_profit_single_item():
    inst = _single_item_instance(201)
    profit = discrete_chain_profit(inst, [1])
    # closed form: max_k t_k (m - k)/m with t_k the quantile midpoints
    m = inst.m
    direct = max(inst.types[k] * (m - k) / m for k in range(m))
    assert profit == pytest.approx(direct, abs=1e-12)


def test_best_nested_discrete_matches_lp_under_nesting():
    spec = two_item_spec(0.3, 0.5)
    inst = DiscretizedInstance.from_spec(spec, 101)
    lp = solve_lp(inst)
    profit, chain = best_nested_discrete(inst)
    assert abs(lp.objective - profit) <= 1e-8
    assert chain == (0b10, 0b11)


def test_verdict_confirmed_low_gamma():
    spec = two_item_spec(0.3, 0.5)
    profiles = compute_profiles(spec)
    menu = solve_nested_menu(spec, profiles, build_dominance(spec, profiles))
    inst = DiscretizedInstance.from_spec(spec, 201)
    verdict = compare(inst, menu, solve_lp(inst))
    assert verdict.verdict == "CONFIRMED"
    assert abs(verdict.gap) <= verdict.strict_tolerance


def test_verdict_suboptimal_high_gamma():
    spec = two_item_spec(0.5, 4.5)
    best_sol, _chain = best_nested_menu(spec)
    inst = DiscretizedInstance.from_spec(spec, 201)
    verdict = compare(inst, best_sol, solve_lp(inst))
    assert verdict.verdict == "NESTED_SUBOPTIMAL"
    assert verdict.gap > verdict.strict_tolerance
    assert verdict.raw_gap > verdict.tolerance


def test_verdict_confirmed_degenerate_beta_one():
    spec = two_item_spec(1.0, 4.5)
    best_sol, _chain = best_nested_menu(spec)
    inst = DiscretizedInstance.from_spec(spec, 201)
    verdict = compare(inst, best_sol, solve_lp(inst))
    assert verdict.verdict == "CONFIRMED"


# ---------------------------------------------------------------------------
# LP text dump


def test_dump_lp_text_structure():
    inst = _single_item_instance(11)
    text = dump_lp_text(inst)
    assert text.startswith("\\")
    assert "Maximize" in text and "Subject To" in text and text.rstrip().endswith("End")
    assert text.count("ic_") == 11 * 10
    assert text.count("ir_") == 11
