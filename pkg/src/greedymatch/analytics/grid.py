"""Grid lower bound for two equiprobable weights ``{1, 1 + delta}``.

The grid is cut into ``2 x n`` strips. Step 1 keeps only strip edges. Step 2
also drops the horizontal edges of each strip's second row, leaving a comb.
Step 3 matches the second-row users that step 2 left free, treating them as
short lines.

Per strip column, greedy on the comb earns the slope of a renewal
recurrence. Step 3 adds the expected line weight on segments whose length
is geometric with parameter ``p_M``, where ``p_M`` is the chance that a
first-row user takes its vertical edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import InvalidParameterError, UnsupportedCaseError
from ..graph import WeightModel
from .linear import RecurrenceSpec, two_level_recurrence

P_M_STATED = 4.0 / 15.0


def comb_recurrence(v1: float, v2: float, p1: float) -> RecurrenceSpec:
    """Recurrence for the ``2 x n`` comb with two weight levels."""
    p2 = 1.0 - p1
    const = (1.0 - p1 ** 4) * v2 + p1 * p1 * v1
    return RecurrenceSpec(const, [(1, p1 * p2), (2, p1 ** 3 + p2), (3, p1 * p1 * p2)])


def grid_recurrence(weight_model: WeightModel | None = None, delta: float | None = None
                    ) -> RecurrenceSpec:
    """Comb recurrence for ``K = 2``.

    Pass either a two-level model or ``delta`` (uniform ``{1, 1 + delta}``,
    which allows ``delta = 0``).
    """
    if weight_model is not None:
        if weight_model.K != 2:
            raise UnsupportedCaseError("grid recurrence is derived for K = 2 only")
        return comb_recurrence(weight_model.values[0], weight_model.values[1],
                               weight_model.probs[0])
    if delta is None or delta < 0:
        raise InvalidParameterError("need a two-level weight model or delta >= 0")
    return comb_recurrence(1.0, 1.0 + delta, 0.5)


def right_left_proposals_printed(K: int) -> tuple[list[float], list[float]]:
    """Evaluate the printed proposal recursions for equiprobable weights.

    ``y_r[k] = (k/K) (1 - sum_{t>k} y_r[t] / K)`` and
    ``y_l[k] = (k/K) (1 - sum_{t>=k} y_r[t] / K)``, solved from ``k = K`` down.
    """
    y_r = [0.0] * (K + 1)
    for k in range(K, 0, -1):
        y_r[k] = (k / K) * (1.0 - sum(y_r[t] for t in range(k + 1, K + 1)) / K)
    y_l = [0.0] * (K + 1)
    for k in range(K, 0, -1):
        y_l[k] = (k / K) * (1.0 - sum(y_r[t] for t in range(k, K + 1)) / K)
    return y_r[1:], y_l[1:]


def vertical_match_probability(y_r, y_l, probs) -> float:
    """Chance a first-row user takes its vertical edge in the comb.

    The second-row user always proposes upward. The first-row user proposes
    down unless a side neighbor offers an edge at least as heavy; with
    independent sides this is ``sum_k p_k prod_side (1 - sum_{k'>=k} p_k' y_k'^side)``.
    """
    K = len(probs)
    total = 0.0
    for k in range(K):
        keep = 1.0
        for y in (y_r, y_l):
            keep *= 1.0 - sum(probs[j] * y[j] for j in range(k, K))
        total += probs[k] * keep
    return total


def step3_sequence(delta: float, t_max: int) -> list[float]:
    return two_level_recurrence(1.0, 1.0 + delta, 0.5).iterate(t_max, {2: 1.0 + delta / 2})


def step3_term(delta: float, p_m: float = P_M_STATED, t_max: int = 100) -> float:
    """Expected step-3 weight per second-row user, summed over segment lengths ``2..t_max``."""
    a = step3_sequence(delta, t_max)
    q = 1.0 - p_m
    return math.fsum(q ** t * p_m * p_m * a[t] for t in range(2, t_max + 1))


def step3_tail_bound(delta: float, p_m: float = P_M_STATED, t_max: int = 100) -> float:
    """Upper bound on the dropped terms ``t > t_max``.

    Uses ``a_t <= t (1 + delta) / 2`` (at most ``t/2`` matched edges) and the
    closed form of ``sum_{t>T} t q^t``.
    """
    q = 1.0 - p_m
    T = t_max + 1
    tail = q ** T * (T - (T - 1) * q) / (1.0 - q) ** 2
    return p_m * p_m * (1.0 + delta) / 2.0 * tail


def grid_greedy_per_strip_column(delta: float, p_m: float = P_M_STATED, t_max: int = 100) -> float:
    return grid_recurrence(delta=delta).slope + step3_term(delta, p_m, t_max)


def grid_bound_per_node(delta: float) -> float:
    """Neighbor-max expectation per interior grid node (degree 4)."""
    return (16.0 + 15.0 * delta) / 32.0


def pr_lower_bound_grid(delta: float, *, exact: bool = False, p_m: float = P_M_STATED,
                        t_max: int = 100) -> float:
    """Grid PR lower bound.

    Default returns the rounded form ``(0.9213 + 0.6967 delta) / (1 + 0.9375 delta)``;
    ``exact=True`` assembles it from the comb slope and the step-3 sum.
    """
    if delta < 0:
        raise InvalidParameterError("delta must be non-negative")
    if not exact:
        return (0.9213 + 0.6967 * delta) / (1.0 + 0.9375 * delta)
    return grid_greedy_per_strip_column(delta, p_m, t_max) / (2.0 * grid_bound_per_node(delta))


@dataclass
class GridConstants:
    delta: float
    slope: float
    step3: float
    tail_bound: float
    p_m: float
    pr_bound: float


def grid_constants(delta: float, p_m: float = P_M_STATED, t_max: int = 100) -> GridConstants:
    return GridConstants(delta, grid_recurrence(delta=delta).slope, step3_term(delta, p_m, t_max),
                         step3_tail_bound(delta, p_m, t_max), p_m,
                         pr_lower_bound_grid(delta, exact=True, p_m=p_m, t_max=t_max))
