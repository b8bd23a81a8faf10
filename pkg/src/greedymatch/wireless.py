"""Wireless effects on top of greedy matching: link failures and repeated markets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidInputError, InvalidParameterError
from .generators import range_pairs, uniform_disk
from .graph import WeightedGraph, WeightModel
from .greedy import MatchingOutcome, greedy_match


def pair_geometry(coords: np.ndarray, outcome: MatchingOutcome):
    """Distance and midpoint of every matched pair."""
    a = coords[outcome.i]
    b = coords[outcome.j]
    return np.hypot(*(a - b).T), 0.5 * (a + b)


def interference_counts(midpoints: np.ndarray, radius: float) -> np.ndarray:
    """For each pair, the number of other pairs whose midpoint lies within ``radius``."""
    if len(midpoints) == 0:
        return np.zeros(0, dtype=np.int64)
    tree = cKDTree(midpoints)
    counts = tree.query_ball_point(midpoints, r=radius, return_length=True)
    return np.asarray(counts, dtype=np.int64) - 1


def greedy_with_failures(graph: WeightedGraph, delta1: float, delta2: float,
                         interference_radius: float | None = None, seed: int = 0, *,
                         outcome: MatchingOutcome | None = None,
                         tie_rule: str = "id") -> MatchingOutcome:
    """Greedy matching followed by independent transaction failures.

    A pair at distance ``D`` fails with probability ``min(1, delta1 D)``
    (type I) and, independently, with ``min(1, delta2 I)`` (type II) where
    ``I`` counts other matched pairs whose midpoint is within
    ``interference_radius`` (default: the graph's sharing range ``L``).
    The result keeps only surviving pairs; ``info`` records failure counts.
    """
    if graph.coords is None:
        raise InvalidInputError("failure model needs node coordinates")
    if delta1 < 0 or delta2 < 0:
        raise InvalidParameterError("delta1 and delta2 must be non-negative")
    if interference_radius is None:
        interference_radius = graph.meta.get("L")
        if interference_radius is None:
            raise InvalidParameterError("interference_radius is required when the graph "
                                        "does not record its sharing range")
    base = greedy_match(graph, tie_rule=tie_rule) if outcome is None else outcome
    dist, mid = pair_geometry(graph.coords, base)
    inter = interference_counts(mid, interference_radius)
    rng = np.random.default_rng(seed)
    u1 = rng.random(dist.size)
    u2 = rng.random(dist.size)
    fail1 = u1 < np.minimum(1.0, delta1 * dist)
    fail2 = u2 < np.minimum(1.0, delta2 * inter)
    out = base.subset(~(fail1 | fail2))
    out.info = {"failed_type1": int(fail1.sum()), "failed_type2": int(fail2.sum()),
                "pairs_before_failures": int(dist.size)}
    return out


@dataclass
class DynamicResult:
    T: int
    epoch_times: np.ndarray
    participants: np.ndarray
    epoch_weight: np.ndarray
    warmup_epochs: int
    params: dict = field(default_factory=dict)

    @property
    def steady_participants(self) -> float:
        return float(self.participants[self.warmup_epochs:].mean())

    @property
    def weight_per_minute(self) -> float:
        """Time-average matched weight per minute after warm-up."""
        return float(self.epoch_weight[self.warmup_epochs:].mean() / self.T)

    def per_minute_series(self) -> np.ndarray:
        """Per-minute weight, with each epoch's total spread over its ``T`` minutes."""
        return np.repeat(self.epoch_weight / self.T, self.T)


def run_dynamic(lam: float, mu: float, gamma: float, T: int, range_l: float, radius_r: float,
                horizon: int, seed: int, *, weight_model: WeightModel | None = None,
                warmup: int | None = None) -> DynamicResult:
    """Repeated market on a disk with arrivals, departures and re-participation.

    Each minute ``lam`` users arrive (Poisson when ``lam`` is not an integer)
    at uniform positions and stay for an Exponential(``mu``) time. Every ``T``
    minutes the market runs over (a) the previous epoch's participants that
    are still present and opt in again with probability ``gamma`` and (b)
    the users that arrived during the window and are still present. Edge
    weights are drawn afresh each epoch.
    """
    if not (lam > 0 and mu > 0 and 0 <= gamma < 1 and T >= 1 and horizon >= T):
        raise InvalidParameterError("need lam > 0, mu > 0, 0 <= gamma < 1, T >= 1, horizon >= T")
    if range_l <= 0 or radius_r <= 0:
        raise InvalidParameterError("need range_l > 0 and radius_r > 0")
    T = int(T)
    model = weight_model or WeightModel.uniform([1.0, 2.0])
    rng = np.random.default_rng(seed)
    epochs = horizon // T
    if warmup is None:
        # enough epochs for the carried-over population to forget its start
        decay = gamma * math.exp(-mu * T)
        warmup = min(epochs // 2, max(1, math.ceil(math.log(1e-6) / math.log(decay)))
                     if decay > 0 else 1)
    integer_rate = float(lam).is_integer()
    carried_xy = np.zeros((0, 2))
    carried_exit = np.zeros(0)
    times, counts, weights = [], [], []
    for e in range(epochs):
        start = e * T
        epoch_time = start + T
        arrivals = []
        exits = []
        for t in range(T):
            k = int(lam) if integer_rate else int(rng.poisson(lam))
            arrivals.append(uniform_disk(k, radius_r, rng))
            exits.append(start + t + rng.exponential(1.0 / mu, size=k))
        new_xy = np.concatenate(arrivals) if arrivals else np.zeros((0, 2))
        new_exit = np.concatenate(exits) if exits else np.zeros(0)
        stay = carried_exit > epoch_time
        again = rng.random(carried_exit.size) < gamma
        keep = stay & again
        alive_new = new_exit > epoch_time
        xy = np.concatenate([carried_xy[keep], new_xy[alive_new]])
        exit_time = np.concatenate([carried_exit[keep], new_exit[alive_new]])
        n = len(xy)
        total = 0.0
        if n >= 2:
            u, v = range_pairs(xy, range_l)
            level = model.sample_levels(rng, u.size)
            g = WeightedGraph(n, u, v, np.asarray(model.values)[level], level=level,
                              coords=xy, validate=False)
            total = greedy_match(g, backend="numpy").total_weight
        times.append(epoch_time)
        counts.append(n)
        weights.append(total)
        carried_xy, carried_exit = xy, exit_time
    return DynamicResult(T, np.asarray(times), np.asarray(counts), np.asarray(weights),
                         int(warmup), {"lam": lam, "mu": mu, "gamma": gamma,
                                       "range_l": range_l, "radius_r": radius_r})
