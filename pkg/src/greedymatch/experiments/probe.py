"""Monte-Carlo probe of the vertical-match probability in the grid comb.

The comb is a ``2 x n`` strip whose second-row horizontal edges are
removed. A second-row user has a single edge, so it is matched in the comb
exactly when its first-row neighbor takes the vertical edge. Ties go to the
smaller index, as in the grid analysis.

Two candidate values exist. Combining the stated proposal probabilities
gives 4/15. Evaluating the printed recursion gives different left-proposal
probabilities and, through the same combination, 159/512.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..analytics.grid import P_M_STATED, right_left_proposals_printed, vertical_match_probability
from ..graph import WeightedGraph, WeightModel
from ..greedy import greedy_match
from ..stats import Z95
from .harness import sample_seed


def comb_graph(n: int, weight_model: WeightModel, seed: int) -> WeightedGraph:
    """First row ``0..n-1`` as a path; second-row user ``n+i`` hangs below user ``i``."""
    rng = np.random.default_rng(seed)
    top = np.arange(n - 1, dtype=np.int64)
    u = np.concatenate([top, np.arange(n, dtype=np.int64)])
    v = np.concatenate([top + 1, np.arange(n, dtype=np.int64) + n])
    level = weight_model.sample_levels(rng, u.size)
    return WeightedGraph(2 * n, u, v, np.asarray(weight_model.values)[level], level=level,
                         family="comb", validate=False)


@dataclass
class ProbeResult:
    estimate: float
    ci95: float
    samples: int
    stated: float
    recursion: float
    matches_stated: bool
    matches_recursion: bool
    y_recursion: dict = field(default_factory=dict)

    @property
    def supported(self) -> str:
        if self.matches_stated and not self.matches_recursion:
            return "stated"
        if self.matches_recursion and not self.matches_stated:
            return "recursion"
        return "both" if self.matches_stated else "neither"

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "ci95": self.ci95, "samples": self.samples,
                "stated": self.stated, "recursion": self.recursion,
                "matches_stated": self.matches_stated,
                "matches_recursion": self.matches_recursion, "supported": self.supported,
                "y_recursion": self.y_recursion}


def probe_vertical_match(n: int = 100_000, replicates: int = 10, seed: int = 0,
                         weight_model: WeightModel | None = None,
                         trim: int = 50) -> ProbeResult:
    """Estimate the second-row match probability in the comb.

    ``trim`` columns at each end are excluded to remove boundary effects.
    The CI treats replicate means as independent.
    """
    model = weight_model or WeightModel.uniform([1.0, 2.0])
    fractions = []
    for r in range(replicates):
        g = comb_graph(n, model, sample_seed(seed, r))
        mate = greedy_match(g, tie_rule="left", backend="numpy").mate
        bottom = mate[n + trim: 2 * n - trim]
        fractions.append(float(np.count_nonzero(bottom >= 0)) / bottom.size)
    x = np.asarray(fractions)
    est = float(x.mean())
    if x.size > 1:
        half = Z95 * float(x.std(ddof=1)) / math.sqrt(x.size)
    else:
        p = est
        half = Z95 * math.sqrt(p * (1 - p) / (n - 2 * trim))
    y_r, y_l = right_left_proposals_printed(model.K)
    recursion = vertical_match_probability(y_r, y_l, list(model.probs))
    stated = P_M_STATED
    # a match needs the estimate within its CI (floored at 1e-3 for tiny CIs)
    tol = max(half, 1e-3)
    return ProbeResult(est, half, int(x.size * (n - 2 * trim)), stated, recursion,
                       abs(est - stated) <= tol, abs(est - recursion) <= tol,
                       {"right": y_r, "left": y_l})
