"""Greedy matching on the Poisson Galton-Watson tree ``T(d)``.

``y_k`` is the chance that a child joined to its parent by a ``v_k`` edge
proposes upward. That happens when no grandchild offers a heavier edge and
the parent wins any tie at ``v_k``. Children proposing at weight ``v_j``
form independent Poisson(``d p_j y_j``) counts, which gives

    y_k = exp(-d sum_{j>k} p_j y_j) * (1 - exp(-d p_k y_k)) / (d p_k y_k)

and the same equation in series form. Solve from ``k = K`` down, since
``y_k`` depends only on heavier levels.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..bounds import neighbor_max_bound, neighbor_max_bound_poisson
from ..errors import InvalidParameterError, NumericalError
from ..generators import generate_gnp
from ..graph import WeightedGraph, WeightModel
from ..greedy import greedy_match
from ..stats import ratio_of_means


@dataclass
class FixedPointSolution:
    d: float
    y: list[float]
    residuals: list[float]
    weight_model: WeightModel = field(repr=False)

    def to_dict(self) -> dict:
        return {"d": self.d, "y": self.y, "residuals": self.residuals}


def series_rhs(y: float, k: int, higher: float, d: float, weight_model: WeightModel,
               tolerance: float = 1e-10) -> float:
    """Right-hand side for level ``k`` (0-based) in series form.

    ``higher`` is ``sum_{j>k} p_j y_j``.
    """
    x = weight_model.probs[k] * d
    prefactor = math.exp(-(x + higher * d))
    if y <= 0.0:
        raise InvalidParameterError("y must be positive")
    log_q = math.log1p(-y) if y < 1.0 else -math.inf
    acc = 0.0
    term_x = 1.0      # x^i / (i+1)!
    i = 0
    cutoff = tolerance * 1e-3
    while True:
        # (1 - (1-y)^{i+1}) / y without cancellation for small y
        frac = 1.0 / y if y == 1.0 else -math.expm1((i + 1) * log_q) / y
        term = term_x * frac
        acc += term
        if i > x and term < cutoff:
            break
        i += 1
        term_x *= x / (i + 1)
        if i > 10_000:
            raise NumericalError("series failed to converge")
    return prefactor * acc


def closed_form_rhs(y: float, k: int, higher: float, d: float, weight_model: WeightModel) -> float:
    xy = weight_model.probs[k] * d * y
    ratio = 1.0 if xy == 0.0 else -math.expm1(-xy) / xy
    return math.exp(-higher * d) * ratio


def solve_tree_fixed_point(d: float, weight_model: WeightModel,
                           tolerance: float = 1e-10) -> FixedPointSolution:
    """Proposal probabilities ``y_1..y_K`` by bisection, heaviest level first."""
    if d < 0 or tolerance <= 0:
        raise InvalidParameterError("need d >= 0 and tolerance > 0")
    K = weight_model.K
    y = [1.0] * K
    res = [0.0] * K
    if d == 0:
        return FixedPointSolution(0.0, y, res, weight_model)
    higher = 0.0
    for k in range(K - 1, -1, -1):
        def f(t, k=k, higher=higher):
            return t - series_rhs(t, k, higher, d, weight_model, tolerance)

        # f(0+) = -exp(-d * higher) < 0 and f(1) >= 0
        lo, hi = 0.0, 1.0
        if f(hi) <= 0.0:
            root = 1.0
        else:
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if f(mid) < 0.0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= 1e-16:
                    break
            root = 0.5 * (lo + hi)
        r = abs(f(root))
        if r >= max(tolerance, 1e-10):
            raise NumericalError(f"bisection residual {r:.3e} at level {k + 1}")
        y[k] = root
        res[k] = r
        higher += weight_model.probs[k] * root
    return FixedPointSolution(float(d), y, res, weight_model)


def root_match_probabilities(solution: FixedPointSolution) -> list[float]:
    """``Pr(root matched on a v_k edge)`` for each level.

    The root takes its heaviest proposing child: some child proposes at
    ``v_k`` and none at a heavier level.
    """
    model = solution.weight_model
    d = solution.d
    rates = [d * p * y for p, y in zip(model.probs, solution.y)]
    out = []
    for k in range(model.K):
        out.append(-math.expm1(-rates[k]) * math.exp(-sum(rates[k + 1:])))
    return out


def _depth_limit(d: float, node_cap: int) -> int:
    if d < 1.0:
        return max(1, math.ceil(math.log(1e-9) / math.log(d))) if d > 0 else 1
    return max(2, int(math.log(node_cap / 10.0) / math.log(max(d, 1.5))))


def sample_gw_forest(d: float, weight_model: WeightModel, trees: int, rng: np.random.Generator,
                     *, depth: int | None = None, node_cap: int = 100_000,
                     planted_level: int | None = None):
    """Forest of Galton-Watson trees with Poisson(``d``) offspring.

    Returns ``(graph, roots, truncated)``. Node ids are a uniform random
    permutation so the id tie rule acts like a random tie break. With
    ``planted_level`` every root gets exactly one child joined by a weight
    ``v_{planted_level}`` edge and that child carries the random subtree.
    ``truncated`` is True when some tree hit the depth limit with live nodes.
    """
    depth = _depth_limit(d, node_cap) if depth is None else depth
    values = np.asarray(weight_model.values)
    parents, children, levels = [], [], []
    count = trees
    roots = np.arange(trees, dtype=np.int64)
    frontier = roots
    if planted_level is not None:
        kids = np.arange(count, count + trees, dtype=np.int64)
        count += trees
        parents.append(roots)
        children.append(kids)
        levels.append(np.full(trees, planted_level, dtype=np.int64))
        frontier = kids
    truncated = False
    for _ in range(depth):
        if frontier.size == 0:
            break
        k = rng.poisson(d, size=frontier.size)
        total = int(k.sum())
        if total == 0:
            frontier = np.zeros(0, dtype=np.int64)
            break
        par = np.repeat(frontier, k)
        kids = np.arange(count, count + total, dtype=np.int64)
        count += total
        parents.append(par)
        children.append(kids)
        levels.append(weight_model.sample_levels(rng, total))
        frontier = kids
        if count > node_cap * max(1, trees):
            truncated = True
            break
    truncated = truncated or frontier.size > 0
    perm = rng.permutation(count).astype(np.int64)
    if parents:
        u = perm[np.concatenate(parents)]
        v = perm[np.concatenate(children)]
        lv = np.concatenate(levels)
    else:
        u = v = lv = np.zeros(0, dtype=np.int64)
    g = WeightedGraph(count, u, v, values[lv], level=lv, family="tree", validate=False)
    return g, perm[roots], truncated


@dataclass
class RootWeightEstimate:
    mean: float
    stderr: float
    samples: int
    truncated: bool


def simulate_root_weight(d: float, weight_model: WeightModel, samples: int, seed: int,
                         *, batch: int = 200_000, node_cap: int = 100_000) -> RootWeightEstimate:
    """Monte-Carlo mean of half the weight matched at the root of ``T(d)``."""
    rng = np.random.default_rng(seed)
    vals = []
    truncated = False
    left = samples
    while left > 0:
        size = min(batch, left)
        g, roots, trunc = sample_gw_forest(d, weight_model, size, rng, node_cap=node_cap)
        truncated |= trunc
        vals.append(greedy_match(g, backend="numpy").node_weight()[roots])
        left -= size
    x = np.concatenate(vals)
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else float("nan")
    return RootWeightEstimate(float(x.mean()), se, int(x.size), truncated)


def simulate_proposal_probabilities(d: float, weight_model: WeightModel, samples: int,
                                    seed: int) -> tuple[list[float], list[float]]:
    """Empirical ``y_k`` and standard errors from planted trees.

    The root has a single child over a ``v_k`` edge, so it always proposes
    down; the edge is matched exactly when the child proposes up.
    """
    rng = np.random.default_rng(seed)
    means, ses = [], []
    for k in range(weight_model.K):
        hits = 0
        total = 0
        left = samples
        while left > 0:
            size = min(200_000, left)
            g, roots, _ = sample_gw_forest(d, weight_model, size, rng, planted_level=k)
            mate = greedy_match(g, backend="numpy").mate
            # the planted child is the first node created after the roots
            hits += int(np.count_nonzero(mate[roots] >= 0))
            total += size
            left -= size
        p = hits / total
        means.append(p)
        ses.append(math.sqrt(max(p * (1 - p), 1e-300) / total))
    return means, ses


def expected_root_weight(d: float, weight_model: WeightModel, mode: str = "analytic",
                         samples: int = 100_000, seed: int = 0):
    """Expected per-user greedy weight on sparse random graphs via ``T(d)``.

    ``analytic`` returns a float; ``monte_carlo`` returns a
    :class:`RootWeightEstimate`. For ``d >= 1`` the tree approximation is
    degraded and a warning is issued.
    """
    if d < 0:
        raise InvalidParameterError("d must be non-negative")
    if d >= 1.0:
        warnings.warn(f"d = {d} >= 1: tree approximation is degraded", RuntimeWarning,
                      stacklevel=2)
    if mode == "analytic":
        sol = solve_tree_fixed_point(d, weight_model)
        probs = root_match_probabilities(sol)
        return math.fsum(0.5 * v * p for v, p in zip(weight_model.values, probs))
    if mode == "monte_carlo":
        return simulate_root_weight(d, weight_model, samples, seed)
    raise InvalidParameterError(f"mode must be 'analytic' or 'monte_carlo', got {mode!r}")


@dataclass
class GnpPoint:
    d: float
    analytic_weight: float | None
    simulated_weight: float
    simulated_se: float
    bound_analytic: float
    pr_analytic: float | None
    pr_simulated: float
    pr_ci: float


def simulate_gnp_per_user(d: float, n: int, weight_model: WeightModel, samples: int, seed: int):
    """Per-user greedy weight and per-user expected neighbor-max bound on ``G(n, d/n)``.

    Returns the two per-sample arrays.
    """
    ss = np.random.SeedSequence([seed, int(round(d * 1e6))])
    greedy_vals, bound_vals = [], []
    for child in ss.spawn(samples):
        s = int(child.generate_state(1, dtype=np.uint64)[0])
        g = generate_gnp(n, min(1.0, d / n), weight_model, s)
        greedy_vals.append(greedy_match(g, backend="numpy").total_weight / n)
        bound_vals.append(neighbor_max_bound(g, weight_model) / n)
    return np.asarray(greedy_vals), np.asarray(bound_vals)


def pr_curve_gnp(d_grid, n: int, weight_model: WeightModel, samples: int = 20, seed: int = 0
                 ) -> list[GnpPoint]:
    """PR of greedy against the expected neighbor-max bound along a mean-degree grid.

    The analytic column uses the tree fixed point over the Poisson-mixed
    bound for ``d < 1`` and is ``None`` above. The simulated column is the
    ratio of means over ``samples`` graphs with a delta-method CI.
    """
    out = []
    for d in d_grid:
        d = float(d)
        bound = neighbor_max_bound_poisson(d, weight_model)
        analytic = None
        if d < 1.0:
            analytic = expected_root_weight(d, weight_model)
        gv, bv = simulate_gnp_per_user(d, n, weight_model, samples, seed)
        ratio, ci = ratio_of_means(gv, bv)
        se = float(gv.std(ddof=1) / math.sqrt(gv.size)) if gv.size > 1 else float("nan")
        out.append(GnpPoint(d, analytic, float(gv.mean()), se, bound,
                            None if analytic is None else analytic / bound, ratio, ci))
    return out
