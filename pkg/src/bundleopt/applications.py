"""Quality-menu design, costly-screening criterion, rotation comparative statics.

Quality-differentiated goods embed into the bundling machinery as chains
{1}, {1,2}, ..., {1..n}; screening with costly actions embeds as an
(n_qualities + n_actions)-item problem where extra items represent opting
out of each action.  Bundles outside these families carry zero value and are
ignored throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .demand import compute_profiles, sales_volume
from .dominance import EPS_Q, build_dominance, check_union_elasticity
from .menu import solve_nested_menu
from .model import (
    DEFAULT_GRID_SIZE,
    MonomialSum,
    ProblemSpec,
    SpecError,
    TypeDistribution,
    load_spec,
)
from .numerics import bracketed_max, count_descents_to_ascents

TIE_TOL = 1e-9


# ---------------------------------------------------------------------------
# monotone envelopes


def decreasing_envelope(vals: Sequence[float]) -> np.ndarray:
    """Pointwise-smallest nonincreasing function above vals (running max from the right)."""
    return np.maximum.accumulate(np.asarray(vals, dtype=float)[::-1])[::-1]


def increasing_envelope(vals: Sequence[float]) -> np.ndarray:
    """Pointwise-largest nondecreasing function below vals (running min from the right)."""
    return np.minimum.accumulate(np.asarray(vals, dtype=float)[::-1])[::-1]


# ---------------------------------------------------------------------------
# quality design


@dataclass(frozen=True)
class QualityProblem:
    """Qualities x_1 < ... < x_n with per-quality values and production costs."""

    qualities: tuple
    values: tuple  # MonomialSum per quality
    costs: tuple
    dist: TypeDistribution
    grid_size: int = DEFAULT_GRID_SIZE

    @staticmethod
    def from_document(doc: dict) -> "QualityProblem":
        xs = tuple(float(x) for x in doc["qualities"])
        if any(x2 <= x1 for x1, x2 in zip(xs[:-1], xs[1:])) or any(x <= 0 for x in xs):
            raise SpecError("qualities must be positive and strictly increasing")
        costs = tuple(float(c) for c in doc.get("costs", [0.0] * len(xs)))
        if len(costs) != len(xs):
            raise SpecError("need one cost per quality")
        vspec = doc.get("values", {"kind": "multiplicative"})
        if vspec.get("kind", "multiplicative") == "multiplicative":
            values = tuple(MonomialSum(terms=((x, 1.0),)) for x in xs)
        else:
            values = tuple(
                MonomialSum(
                    terms=tuple((float(t["coef"]), float(t["exp"])) for t in e.get("terms", [])),
                    const=float(e.get("const", 0.0)),
                )
                for e in vspec["exprs"]
            )
        if len(values) != len(xs):
            raise SpecError("need one value expression per quality")
        from .model import _parse_distribution

        dist = _parse_distribution(doc["distribution"])
        return QualityProblem(
            qualities=xs,
            values=values,
            costs=costs,
            dist=dist,
            grid_size=int(doc.get("grid_size", DEFAULT_GRID_SIZE)),
        )

    @property
    def multiplicative(self) -> bool:
        return all(
            v.const == 0.0 and len(v.terms) == 1 and v.terms[0] == (x, 1.0)
            for x, v in zip(self.qualities, self.values)
        )

    def embed(self) -> ProblemSpec:
        """Bundling problem whose chain bundle {1..k} is quality k."""
        doc = {
            "n_items": len(self.qualities),
            "distribution": self.dist.to_dict(),
            "values": {
                str(list(range(1, k + 2))): self.values[k].to_dict()
                for k in range(len(self.qualities))
            },
            "costs": {
                str(list(range(1, k + 2))): self.costs[k]
                for k in range(len(self.qualities))
            },
            "grid_size": self.grid_size,
        }
        return load_spec(doc)

    def quality_of_mask(self, mask: int) -> Optional[int]:
        k = mask.bit_length() - 1
        return k if mask == (1 << (k + 1)) - 1 else None


@dataclass(frozen=True)
class EnvelopeResult:
    route: str  # "sales" or "costs"
    qualities: tuple
    d_star: tuple
    d_hat: tuple  # decreasing envelope of sales volumes
    menu: tuple  # 0-based quality indices in the optimal menu
    c_avg: Optional[tuple] = None
    c_check: Optional[tuple] = None  # increasing envelope of average costs
    identity_gap: Optional[float] = None


def quality_sales_volumes(problem: QualityProblem, spec: Optional[ProblemSpec] = None):
    spec = spec or problem.embed()
    masks = [(1 << (k + 1)) - 1 for k in range(len(problem.qualities))]
    return np.array([sales_volume(spec, b) for b in masks]), spec


def _crosscheck_against_solver(problem, spec, d_star, menu_idx) -> None:
    """The envelope menu must agree with the constructive solver on the embedding."""
    profiles = compute_profiles(spec)
    relation = build_dominance(spec, profiles)
    solved = solve_nested_menu(spec, profiles, relation)
    solver_idx = {problem.quality_of_mask(b) for b in solved.bundles}
    menu_set = set(menu_idx)
    if not solver_idx <= menu_set:
        raise RuntimeError(
            f"solver menu {sorted(solver_idx)} not contained in envelope menu {sorted(menu_set)}"
        )
    # envelope members absent from the solver menu must be duplicates: tied
    # with some larger quality at the same envelope level
    d_hat = decreasing_envelope(d_star)
    for k in menu_set - solver_idx:
        tied = any(
            j > k and abs(d_hat[j] - d_hat[k]) <= EPS_Q and j in menu_set
            for j in range(len(d_star))
        )
        if not tied:
            raise RuntimeError(
                f"quality {k} in envelope menu but neither solved nor a tied duplicate"
            )


def quality_menu_from_sales(problem: QualityProblem) -> EnvelopeResult:
    """Optimal quality menu as the touch set of the decreasing sales envelope.

    Cross-checked by embedding into bundles and running the menu solver; the
    two menus must coincide up to dominated duplicates.
    """
    d_star, spec = quality_sales_volumes(problem)
    if np.any(d_star <= 0.0) or np.any(d_star >= 1.0):
        raise ValueError("envelope route requires interior sales volumes for all qualities")
    d_hat = decreasing_envelope(d_star)
    menu = tuple(int(k) for k in np.flatnonzero(d_hat - d_star <= EPS_Q))
    _crosscheck_against_solver(problem, spec, d_star, menu)
    return EnvelopeResult(
        route="sales",
        qualities=problem.qualities,
        d_star=tuple(float(v) for v in d_star),
        d_hat=tuple(float(v) for v in d_hat),
        menu=menu,
    )


def is_regular(dist: TypeDistribution, grid_size: int = DEFAULT_GRID_SIZE) -> bool:
    """Virtual value t - (1-F)/f strictly increasing (1e-10 slack)."""
    t = np.linspace(dist.lo, dist.hi, grid_size)
    vv = t - dist.inv_hazard(t)
    return bool(np.all(np.diff(vv) > -1e-10))


def unit_mr(dist: TypeDistribution, q: float) -> float:
    """Marginal revenue of the unit-value demand curve at quantity q."""
    t = dist.quantile(1.0 - q)
    return float(t - dist.inv_hazard(t))


def unit_mr_inverse(dist: TypeDistribution, c: float) -> float:
    """Quantity where the unit-value marginal revenue equals c (regular F)."""
    g = lambda t: t - dist.inv_hazard(t) - c
    if g(dist.hi) <= 0.0:
        return 0.0
    if g(dist.lo) >= 0.0:
        return 1.0
    t_root = brentq(g, dist.lo, dist.hi, xtol=1e-13)
    return float(1.0 - dist.cdf(t_root))


def quality_menu_from_costs(problem: QualityProblem) -> EnvelopeResult:
    """Optimal quality menu as the touch set of the increasing average-cost envelope.

    Requires multiplicative values x*t and a regular type distribution; the
    identity d_hat = MR^{-1}(c_check) ties this route to the sales-envelope
    route and is asserted pointwise.
    """
    if not problem.multiplicative:
        raise ValueError("cost-envelope route requires multiplicative values x*t")
    if not is_regular(problem.dist, problem.grid_size):
        raise ValueError("cost-envelope route requires a regular type distribution")
    xs = np.asarray(problem.qualities, dtype=float)
    c_avg = np.asarray(problem.costs, dtype=float) / xs
    c_check = increasing_envelope(c_avg)
    menu = tuple(int(k) for k in np.flatnonzero(c_avg - c_check <= TIE_TOL))
    d_star, _spec = quality_sales_volumes(problem)
    d_hat = decreasing_envelope(d_star)
    d_hat_from_costs = np.array([unit_mr_inverse(problem.dist, c) for c in c_check])
    gap = float(np.max(np.abs(d_hat_from_costs - d_hat)))
    if gap > 1e-8:
        raise RuntimeError(
            f"envelope identity violated: max |MR^-1(c_check) - d_hat| = {gap:.3g}"
        )
    return EnvelopeResult(
        route="costs",
        qualities=problem.qualities,
        d_star=tuple(float(v) for v in d_star),
        d_hat=tuple(float(v) for v in d_hat),
        menu=menu,
        c_avg=tuple(float(v) for v in c_avg),
        c_check=tuple(float(v) for v in c_check),
        identity_gap=gap,
    )


# ---------------------------------------------------------------------------
# costly screening


@dataclass(frozen=True)
class ScreeningProblem:
    """Qualities with utilities u(x,t), costly actions with disutilities c(y,t)."""

    qualities: tuple
    utilities: tuple  # MonomialSum per quality
    production_costs: tuple
    action_costs: tuple  # MonomialSum per action, strictly increasing in t
    dist: TypeDistribution
    grid_size: int = DEFAULT_GRID_SIZE

    @staticmethod
    def from_document(doc: dict) -> "ScreeningProblem":
        quality = QualityProblem.from_document(
            {
                "qualities": doc["qualities"],
                "costs": doc.get("production_costs", [0.0] * len(doc["qualities"])),
                "values": doc.get("values", {"kind": "multiplicative"}),
                "distribution": doc["distribution"],
                "grid_size": doc.get("grid_size", DEFAULT_GRID_SIZE),
            }
        )
        actions = tuple(
            MonomialSum(
                terms=tuple((float(t["coef"]), float(t["exp"])) for t in a.get("terms", [])),
                const=float(a.get("const", 0.0)),
            )
            for a in doc["actions"]
        )
        if not actions:
            raise SpecError("screening problem needs at least one costly action")
        return ScreeningProblem(
            qualities=quality.qualities,
            utilities=quality.values,
            production_costs=quality.costs,
            action_costs=actions,
            dist=quality.dist,
            grid_size=quality.grid_size,
        )


@dataclass
class ScreeningReport:
    status: str  # ok | trivially_optimal | assumptions_failed
    optimal: Optional[bool]
    d_star_qualities: tuple
    d_star_actions: tuple
    x_star: int  # index of the largest best-selling quality
    y_star: int  # index of the smallest least-selling action
    surplus_pairs: tuple  # (quality index, action index) with positive surplus somewhere
    messages: list = field(default_factory=list)


def _opt_out_volume(problem: ScreeningProblem, j: int) -> float:
    """Sales volume of the hypothetical product 'skip action j'."""
    dist = problem.dist
    c = problem.action_costs[j]

    def profit(q):
        return float(c(dist.quantile(1.0 - q)) * q)

    def slope(q):
        t = dist.quantile(1.0 - q)
        return float(c(t) - dist.inv_hazard(t) * c.slope(t))

    return bracketed_max(profit, 0.0, 1.0, coarse=1001, tol=1e-10, slope=slope)


def screening_optimal(problem: ScreeningProblem) -> ScreeningReport:
    """Is requiring a costly action part of every optimal mechanism?

    The criterion compares the smallest opt-out sales volume against the
    largest quality sales volume.  Assumption checks (monotone disutilities,
    concave profit curves, monotone net values, single-peaked net profit
    below both peaks) guard the verdict; failures withhold it.
    """
    t = np.linspace(problem.dist.lo, problem.dist.hi, problem.grid_size)
    messages: list[str] = []

    for j, c in enumerate(problem.action_costs):
        cv = np.asarray(c(t), dtype=float)
        if np.any(np.diff(cv) <= 0.0) or np.any(cv < -1e-12):
            raise ValueError(
                f"disutility of action {j} must be nonnegative and strictly increasing "
                "in type; nonincreasing disutilities never support costly screening "
                "and are out of scope"
            )

    n = len(problem.qualities)
    m = len(problem.action_costs)
    dist = problem.dist

    def quality_profit_curve(i):
        q = np.linspace(0.0, 1.0, problem.grid_size)
        price = np.asarray(problem.utilities[i](dist.quantile(1.0 - q)), dtype=float)
        return (price - problem.production_costs[i]) * q

    def quality_volume(i):
        u = problem.utilities[i]

        def profit(q):
            return float((u(dist.quantile(1.0 - q)) - problem.production_costs[i]) * q)

        def slope(q):
            tt = dist.quantile(1.0 - q)
            return float(u(tt) - problem.production_costs[i] - dist.inv_hazard(tt) * u.slope(tt))

        return bracketed_max(profit, 0.0, 1.0, coarse=1001, tol=1e-10, slope=slope)

    d_x = np.array([quality_volume(i) for i in range(n)])
    d_y = np.array([_opt_out_volume(problem, j) for j in range(m)])

    # surplus-positive allocations
    surplus_pairs = []
    for i in range(n):
        ui = np.asarray(problem.utilities[i](t), dtype=float)
        for j in range(m):
            cj = np.asarray(problem.action_costs[j](t), dtype=float)
            if np.max(ui - cj - problem.production_costs[i]) > 1e-12:
                surplus_pairs.append((i, j))

    x_star = int(np.flatnonzero(d_x >= d_x.max() - TIE_TOL)[-1])
    y_star = int(np.flatnonzero(d_y <= d_y.min() + TIE_TOL)[0])
    if np.sum(d_x >= d_x.max() - TIE_TOL) > 1:
        messages.append(
            "strictness violated: several qualities tie for the highest sales volume; "
            "keeping the largest"
        )
    if np.sum(d_y <= d_y.min() + TIE_TOL) > 1:
        messages.append(
            "strictness violated: several actions tie for the lowest opt-out volume; "
            "keeping the smallest"
        )
    report = ScreeningReport(
        status="ok",
        optimal=None,
        d_star_qualities=tuple(float(v) for v in d_x),
        d_star_actions=tuple(float(v) for v in d_y),
        x_star=x_star,
        y_star=y_star,
        surplus_pairs=tuple(surplus_pairs),
        messages=messages,
    )

    # a surplus-positive allocation whose net value falls in type screens trivially
    for i, j in surplus_pairs:
        net = np.asarray(problem.utilities[i](t), dtype=float) - np.asarray(
            problem.action_costs[j](t), dtype=float
        )
        pos = net[:-1] > 1e-12
        if np.any(pos) and np.all(np.diff(net)[pos] < 1e-12) and np.any(np.diff(net)[pos] < -1e-12):
            report.status = "trivially_optimal"
            report.optimal = True
            report.messages.append(
                f"net value of quality {i} with action {j} decreases in type where positive"
            )
            return report

    checked = set(surplus_pairs) | {(x_star, y_star)}
    failures = []
    for i, j in sorted(checked):
        net = np.asarray(problem.utilities[i](t), dtype=float) - np.asarray(
            problem.action_costs[j](t), dtype=float
        )
        pos = net[:-1] > 1e-12
        if np.any(pos & (np.diff(net) < -1e-10)):
            failures.append(f"net value of quality {i} minus action {j} not increasing where positive")
        pi_x = quality_profit_curve(i)
        q = np.linspace(0.0, 1.0, problem.grid_size)
        pi_y = np.asarray(
            problem.action_costs[j](dist.quantile(1.0 - q)), dtype=float
        ) * q
        k = int(min(d_x[i], d_y[j]) * (problem.grid_size - 1))
        if k >= 2 and count_descents_to_ascents(pi_x[: k + 1] - pi_y[: k + 1]) > 0:
            failures.append(
                f"net profit of quality {i} minus action {j} multi-peaked below both volumes"
            )

    for i in range(n):
        if count_descents_to_ascents(quality_profit_curve(i)) > 0:
            failures.append(f"profit curve of quality {i} is multi-peaked")
    q = np.linspace(0.0, 1.0, problem.grid_size)
    for j in range(m):
        pi_y = np.asarray(problem.action_costs[j](dist.quantile(1.0 - q)), dtype=float) * q
        if count_descents_to_ascents(pi_y) > 0:
            failures.append(f"opt-out profit curve of action {j} is multi-peaked")

    if failures:
        report.status = "assumptions_failed"
        report.messages.extend(failures)
        return report

    report.optimal = bool(d_y.min() < d_x.max() - TIE_TOL)
    return report


def embed_screening(problem: ScreeningProblem):
    """Bundling problem with quality-upgrade items plus opt-out items.

    Items 1..n are quality upgrades; items n+1..n+m represent skipping each
    costly action.  Returns (spec, info) where info maps bundle masks to
    their meaning and lists the masks that involve performing an action.
    """
    n = len(problem.qualities)
    m = len(problem.action_costs)
    all_optouts = ((1 << m) - 1) << n
    t = np.linspace(problem.dist.lo, problem.dist.hi, problem.grid_size)

    values: dict[str, dict] = {}
    costs: dict[str, float] = {}
    info = {"clean": {}, "damaged": {}, "costly_masks": []}

    def key_of(mask: int) -> str:
        items = [j + 1 for j in range(n + m) if mask & (1 << j)]
        return str(items)

    for i in range(n):
        quality_bits = (1 << (i + 1)) - 1
        clean = quality_bits | all_optouts
        values[key_of(clean)] = problem.utilities[i].to_dict()
        costs[key_of(clean)] = problem.production_costs[i]
        info["clean"][clean] = i
        for j in range(m):
            ui = np.asarray(problem.utilities[i](t), dtype=float)
            cj = np.asarray(problem.action_costs[j](t), dtype=float)
            if np.max(ui - cj - problem.production_costs[i]) <= 1e-12:
                continue  # never generates surplus; ignore
            mask = quality_bits | (all_optouts & ~(1 << (n + j)))
            expr = MonomialSum(
                terms=problem.utilities[i].terms
                + tuple((-c, e) for c, e in problem.action_costs[j].terms),
                const=problem.utilities[i].const - problem.action_costs[j].const,
            )
            values[key_of(mask)] = expr.to_dict()
            costs[key_of(mask)] = problem.production_costs[i]
            info["damaged"][mask] = (i, j)
            info["costly_masks"].append(mask)

    doc = {
        "n_items": n + m,
        "distribution": problem.dist.to_dict(),
        "values": values,
        "costs": costs,
        "grid_size": problem.grid_size,
    }
    return load_spec(doc), info


# ---------------------------------------------------------------------------
# two-item family and rotation comparative statics


def two_item_power_family(
    beta: float,
    gamma: float,
    alpha: float = 1.0,
    hi: float = 2.0,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> ProblemSpec:
    """Built-in benchmark: t^alpha and t^beta items whose union adds t^gamma."""
    return load_spec(
        {
            "n_items": 2,
            "distribution": {"kind": "uniform", "lo": 0.0, "hi": hi},
            "values": {
                "[1]": {"terms": [{"coef": 1.0, "exp": alpha}]},
                "[2]": {"terms": [{"coef": 1.0, "exp": beta}]},
                "[1,2]": {
                    "terms": [
                        {"coef": 1.0, "exp": alpha},
                        {"coef": 1.0, "exp": beta},
                        {"coef": 1.0, "exp": gamma},
                    ]
                },
            },
            "grid_size": grid_size,
        }
    )


def menu_tier(menu: Sequence[int], item: int) -> Optional[int]:
    """1-based index of the smallest menu bundle containing the item."""
    for r, b in enumerate(sorted(menu), start=1):
        if b & (1 << (item - 1)):
            return r
    return None


@dataclass
class RotationPoint:
    s: float
    menu: tuple  # minimal optimal menu (undominated chain), ascending
    d_star: dict
    tiers: tuple  # tier of item 1, tier of item 2
    size: int
    union_ok: bool
    nested: bool


@dataclass
class RotationSweep:
    points: list
    rotated_item: Optional[int]
    premises_ok: bool
    premise_failures: list
    tier_up_ok: Optional[bool]  # rotated item's tier nondecreasing
    tier_down_ok: Optional[bool]  # other item's tier nonincreasing
    size_quasiconvex: Optional[bool]


def _quasiconvex(sizes: Sequence[int]) -> bool:
    n = len(sizes)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                if sizes[j] > max(sizes[i], sizes[k]):
                    return False
    return True


def rotation_sweep(
    family: Callable[[float], ProblemSpec], s_values: Sequence[float]
) -> RotationSweep:
    """Sweep a two-item zero-cost family, tracking menus, tiers, and menu size.

    Verifies the demand-rotation premises between consecutive parameter
    values and reports the three comparative-statics conclusions (tier of the
    rotated item nondecreasing, other tier nonincreasing, menu size
    quasi-convex); conclusions are only asserted when the premises hold.
    """
    points = []
    for s in s_values:
        spec = family(float(s))
        if spec.n_items != 2:
            raise ValueError("rotation sweep requires a two-item family")
        if not spec.zero_costs():
            raise ValueError("rotation sweep requires zero costs")
        profiles = compute_profiles(spec)
        relation = build_dominance(spec, profiles)
        union = check_union_elasticity(spec, profiles)
        menu = tuple(sorted(relation.undominated))
        points.append(
            RotationPoint(
                s=float(s),
                menu=menu,
                d_star=dict(relation.d_star),
                tiers=(menu_tier(menu, 1), menu_tier(menu, 2)),
                size=len(menu),
                union_ok=union.holds,
                nested=relation.nested,
            )
        )

    failures = []
    for p in points:
        if not p.union_ok:
            failures.append(f"union elasticity fails at s={p.s:g}")
        if not p.nested:
            failures.append(f"undominated bundles not nested at s={p.s:g}")

    # which single item rotates?
    d1 = np.array([p.d_star.get(0b01, np.nan) for p in points])
    d2 = np.array([p.d_star.get(0b10, np.nan) for p in points])
    var1 = float(np.nanmax(d1) - np.nanmin(d1))
    var2 = float(np.nanmax(d2) - np.nanmin(d2))
    rotated = None
    if var1 > EPS_Q and var2 <= EPS_Q:
        rotated = 1
    elif var2 > EPS_Q and var1 <= EPS_Q:
        rotated = 2
    else:
        failures.append("no single rotating item: both standalone volumes vary")

    if rotated is not None:
        d_i = d1 if rotated == 1 else d2
        d_u = np.array([p.d_star.get(0b11, np.nan) for p in points])
        for a in range(len(points) - 1):
            if d_i[a + 1] > d_i[a] + EPS_Q:
                failures.append(f"rotated item volume increases between s={points[a].s:g} and s={points[a+1].s:g}")
            if d_u[a + 1] > d_u[a] + EPS_Q:
                failures.append(f"union volume increases between s={points[a].s:g} and s={points[a+1].s:g}")
            if d_i[a] <= d_u[a] + EPS_Q and d_i[a + 1] > d_u[a + 1] + EPS_Q:
                failures.append(f"volume ordering linkage breaks between s={points[a].s:g} and s={points[a+1].s:g}")

    premises_ok = not failures
    tier_up = tier_down = size_qc = None
    if premises_ok and rotated is not None:
        other = 3 - rotated
        r_i = [p.tiers[rotated - 1] for p in points]
        r_j = [p.tiers[other - 1] for p in points]
        tier_up = all(a <= b for a, b in zip(r_i[:-1], r_i[1:]))
        tier_down = all(a >= b for a, b in zip(r_j[:-1], r_j[1:]))
        size_qc = _quasiconvex([p.size for p in points])

    return RotationSweep(
        points=points,
        rotated_item=rotated,
        premises_ok=premises_ok,
        premise_failures=failures,
        tier_up_ok=tier_up,
        tier_down_ok=tier_down,
        size_quasiconvex=size_qc,
    )


def refine_menu_transition(
    family: Callable[[float], ProblemSpec],
    s_lo: float,
    s_hi: float,
    tol: float = 1e-4,
) -> float:
    """Bisect the parameter where the minimal optimal menu changes."""

    def menu_at(s):
        spec = family(s)
        profiles = compute_profiles(spec)
        return tuple(sorted(build_dominance(spec, profiles).undominated))

    left = menu_at(s_lo)
    while s_hi - s_lo > tol:
        mid = 0.5 * (s_lo + s_hi)
        if menu_at(mid) == left:
            s_lo = mid
        else:
            s_hi = mid
    return 0.5 * (s_lo + s_hi)


def menu_regions(family: Callable[[float], ProblemSpec], s_values: Sequence[float]):
    """Consecutive runs of equal minimal menus with refined change points."""
    menus = []
    for s in s_values:
        spec = family(float(s))
        profiles = compute_profiles(spec)
        menus.append(tuple(sorted(build_dominance(spec, profiles).undominated)))
    regions = []
    start = 0
    for k in range(1, len(s_values) + 1):
        if k == len(s_values) or menus[k] != menus[start]:
            regions.append(
                {
                    "s_start": float(s_values[start]),
                    "s_end": float(s_values[k - 1]),
                    "menu": menus[start],
                }
            )
            if k < len(s_values):
                regions[-1]["transition"] = refine_menu_transition(
                    family, float(s_values[k - 1]), float(s_values[k])
                )
            start = k
    return regions
