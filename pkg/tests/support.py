"""Shared test helpers: canonical instances and a seeded instance generator."""

from __future__ import annotations

import numpy as np

from bundleopt import load_spec


def two_item_doc(beta, gamma, alpha=1.0, hi=2.0, grid_size=4097):
    """The two-item power-value benchmark family document."""
    return {
        "n_items": 2,
        "distribution": {"kind": "uniform", "lo": 0.0, "hi": float(hi)},
        "values": {
            "[1]": {"terms": [{"coef": 1.0, "exp": float(alpha)}]},
            "[2]": {"terms": [{"coef": 1.0, "exp": float(beta)}]},
            "[1,2]": {
                "terms": [
                    {"coef": 1.0, "exp": float(alpha)},
                    {"coef": 1.0, "exp": float(beta)},
                    {"coef": 1.0, "exp": float(gamma)},
                ]
            },
        },
        "costs": {},
        "grid_size": grid_size,
    }


def two_item_spec(beta, gamma, alpha=1.0, hi=2.0, grid_size=4097):
    return load_spec(two_item_doc(beta, gamma, alpha=alpha, hi=hi, grid_size=grid_size))


def single_item_doc(coef=1.0, exp=1.0, lo=0.0, hi=1.0, cost=0.0, grid_size=4097):
    return {
        "n_items": 1,
        "distribution": {"kind": "uniform", "lo": float(lo), "hi": float(hi)},
        "values": {"[1]": {"terms": [{"coef": float(coef), "exp": float(exp)}]}},
        "costs": {"[1]": float(cost)},
        "grid_size": grid_size,
    }


def random_instance_doc(rng: np.random.Generator, n_items=2, allow_costs=True, grid_size=4097):
    """Random additive-plus-synergy monomial instance on U[0, 1].

    Per-item value a_i * t^{e_i}; every multi-item bundle adds a shared
    synergy s * (|b|-1) * t^{e_s}, which keeps values monotone in inclusion
    and incremental values strictly increasing.  Value scales are kept small
    so LP discretization bias stays well inside the 5/m comparison band.
    """
    exps = rng.uniform(0.4, 2.2, size=n_items)
    coefs = rng.uniform(0.3, 1.0, size=n_items)
    syn = float(rng.uniform(0.0, 0.35))
    syn_exp = float(rng.uniform(0.4, 2.2))
    values = {}
    costs = {}
    for mask in range(1, 1 << n_items):
        items = [j for j in range(n_items) if mask & (1 << j)]
        terms = [{"coef": float(coefs[j]), "exp": float(exps[j])} for j in items]
        if len(items) > 1 and syn > 0:
            terms.append({"coef": syn * (len(items) - 1), "exp": syn_exp})
        values[str([j + 1 for j in items])] = {"terms": terms}
    if allow_costs and rng.uniform() < 0.4:
        unit_costs = rng.uniform(0.0, 0.25, size=n_items) * coefs
        for mask in range(1, 1 << n_items):
            items = [j for j in range(n_items) if mask & (1 << j)]
            costs[str([j + 1 for j in items])] = float(sum(unit_costs[j] for j in items))
    return {
        "n_items": n_items,
        "distribution": {"kind": "uniform", "lo": 0.0, "hi": 1.0},
        "values": values,
        "costs": costs,
        "grid_size": grid_size,
    }


def generate_clean_specs(seed, count, n_items_choices=(2, 3), require_nested=False,
                         grid_size=4097, max_tries=10000):
    """Deterministic stream of validated, warning-free random instances."""
    import warnings as _warnings

    from bundleopt import SpecError, compute_profiles, validate_assumptions
    from bundleopt.dominance import build_dominance

    rng = np.random.default_rng(seed)
    out = []
    tries = 0
    while len(out) < count and tries < max_tries:
        tries += 1
        n = int(rng.choice(n_items_choices))
        doc = random_instance_doc(rng, n_items=n, grid_size=grid_size)
        try:
            with _warnings.catch_warnings():
                _warnings.simplefilter("error")
                spec = load_spec(doc)
                report = validate_assumptions(spec)
                if report.warnings:
                    continue
                profiles = compute_profiles(spec)
                relation = build_dominance(spec, profiles)
        except (SpecError, Warning):
            continue
        if require_nested and not relation.nested:
            continue
        out.append((spec, profiles, relation))
    if len(out) < count:
        raise RuntimeError(f"generator produced only {len(out)}/{count} instances")
    return out
