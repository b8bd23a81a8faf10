"""Upper bounds on the optimal matching weight.

Instance bounds return :class:`OptimalResult` with a bound method tag;
expectation forms return a plain float.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .graph import WeightedGraph, WeightModel
from .optimal import OptimalResult, path_sequences


def _segment_halves(mask: np.ndarray) -> int:
    """``sum(ceil(len / 2))`` over maximal runs of ``True`` in ``mask``."""
    if mask.size == 0:
        return 0
    padded = np.concatenate([[False], mask, [False]]).astype(np.int8)
    diff = np.diff(padded)
    starts = np.flatnonzero(diff == 1)
    ends = np.flatnonzero(diff == -1)
    return int(np.sum((ends - starts + 1) // 2))


def decomposition_bound_instance(graph: WeightedGraph,
                                 weight_model: WeightModel | None = None) -> OptimalResult:
    """Level-by-level decomposition bound on a path.

    Step ``k`` lowers every surviving weight by ``v_k - v_{k-1}``. The edges
    still positive form segments, and a maximum-cardinality matching of a
    segment of length ``l`` has ``ceil(l / 2)`` edges. The bound sums the
    increment times that count over all levels.
    """
    seqs = path_sequences(graph)
    if weight_model is not None:
        support = np.asarray(weight_model.values)
        if graph.m and not np.all(np.isin(graph.w, support)):
            raise InvalidInputError("edge weight outside the weight model's support")
    else:
        support = np.unique(graph.w)
    total = 0.0
    prev = 0.0
    for level in support.tolist():
        inc = level - prev
        prev = level
        if inc == 0:
            continue
        count = 0
        for _, eids in seqs:
            count += _segment_halves(graph.w[np.asarray(eids, dtype=np.int64)] >= level)
        total += inc * count
    return OptimalResult(total, "decomposition_bound")


def decomposition_bound_expected(n: int, weight_model: WeightModel) -> float:
    """Large-``n`` expectation of the decomposition bound on an ``n``-user line."""
    v = weight_model.values
    cdf = weight_model.cdf()
    acc = n * v[0] / 2.0
    for k in range(1, weight_model.K):
        f = cdf[k]
        acc += n * (v[k] - v[k - 1]) * (1.0 - f) / (2.0 - f)
    return acc


def _max_neighbor(graph: WeightedGraph) -> np.ndarray:
    best = np.zeros(graph.n)
    np.maximum.at(best, graph.u, graph.w)
    np.maximum.at(best, graph.v, graph.w)
    return best


def neighbor_max_result(graph: WeightedGraph) -> OptimalResult:
    """Instance form: half the sum over nodes of the heaviest incident edge."""
    return OptimalResult(0.5 * float(_max_neighbor(graph).sum()), "neighbor_max_bound")


def neighbor_max_per_degree(weight_model: WeightModel, degree) -> np.ndarray:
    """Expected heaviest incident weight of a node with ``degree`` i.i.d. edges."""
    deg = np.asarray(degree, dtype=np.float64)
    cdf = weight_model.cdf()
    out = np.zeros_like(deg)
    for k, vk in enumerate(weight_model.values, start=1):
        hi = np.power(cdf[k], deg)
        lo = np.where(deg > 0, np.power(cdf[k - 1], deg), 1.0)
        out += vk * (hi - lo)
    return out


def neighbor_max_bound(graph: WeightedGraph, weight_model: WeightModel | None = None) -> float:
    """Neighbor-max bound on the optimum.

    Without a model this is the instance bound. With a model it is the
    expectation over i.i.d. weights given the graph's degree sequence.
    """
    if weight_model is None:
        return neighbor_max_result(graph).total_weight
    return 0.5 * float(neighbor_max_per_degree(weight_model, graph.degree).sum())


def neighbor_max_bound_poisson(d: float, weight_model: WeightModel) -> float:
    """Per-node expectation form when degrees are Poisson(``d``).

    Uses ``E[F^D] = exp(-d (1 - F))``.
    """
    if d < 0:
        raise InvalidParameterError("mean degree must be non-negative")
    cdf = weight_model.cdf()
    acc = 0.0
    for k, vk in enumerate(weight_model.values, start=1):
        acc += vk * (math.exp(-d * (1.0 - cdf[k])) - math.exp(-d * (1.0 - cdf[k - 1])))
    return 0.5 * acc


def multiunit_allocation(q_self: int, neighbors: Sequence[tuple[float, int]]) -> list[int]:
    """Prefix allocation of ``q_self`` units over neighbors sorted by descending weight.

    ``neighbors`` holds ``(weight, q_neighbor)`` pairs; the result holds the
    units assigned to each in the same order.
    """
    out = []
    used = 0
    for _, qn in neighbors:
        x = max(0, min(q_self - used, qn))
        out.append(x)
        used += qn
    return out


def multiunit_bound(graph: WeightedGraph) -> float:
    """Half of the sum over nodes of their best prefix allocation."""
    if graph.quantities is None:
        raise InvalidInputError("multi-unit bound needs per-node quantities")
    q = graph.quantities.tolist()
    nbrs: list[list[tuple[float, int]]] = [[] for _ in range(graph.n)]
    for a, b, c in graph.edges:
        nbrs[a].append((c, q[b]))
        nbrs[b].append((c, q[a]))
    total = 0.0
    for i, lst in enumerate(nbrs):
        # allocation fills prefixes, so the order among equal weights is irrelevant
        lst.sort(key=lambda t: -t[0])
        for (c, _), x in zip(lst, multiunit_allocation(q[i], lst)):
            total += c * x
    return 0.5 * total


def multiunit_bound_result(graph: WeightedGraph) -> OptimalResult:
    return OptimalResult(multiunit_bound(graph), "multiunit_bound")


def multiunit_bound_line_expected(weights, quantity_values: Sequence[int],
                                  quantity_probs: Sequence[float] | None = None) -> float:
    """Per-user expectation of the multi-unit bound on a long line.

    ``weights`` is a :class:`WeightModel` or a list of ``(value, prob)``
    pairs (values may coincide). Enumerates the node's own quantity and its
    two neighbors' weights and quantities.
    """
    qv = list(quantity_values)
    qp = [1.0 / len(qv)] * len(qv) if quantity_probs is None else list(quantity_probs)
    if isinstance(weights, WeightModel):
        wv, wp = weights.values, weights.probs
    else:
        wv, wp = [w for w, _ in weights], [p for _, p in weights]
    acc = 0.0
    for qi, pi in zip(qv, qp):
        for w1, pw1 in zip(wv, wp):
            for w2, pw2 in zip(wv, wp):
                for q1, pq1 in zip(qv, qp):
                    for q2, pq2 in zip(qv, qp):
                        lst = sorted([(w1, q1), (w2, q2)], key=lambda t: -t[0])
                        alloc = multiunit_allocation(qi, lst)
                        val = sum(c * x for (c, _), x in zip(lst, alloc))
                        acc += pi * pw1 * pw2 * pq1 * pq2 * val
    return 0.5 * acc
