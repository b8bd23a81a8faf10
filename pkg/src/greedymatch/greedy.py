"""Round-synchronous greedy matching (mutual best-proposal fixed point).

Every round has two phases. In the proposal phase each active node proposes
to its most preferred active neighbor: highest weight first, ties broken by
the neighbor's node id. In the matching phase every mutual proposal becomes
a match. A node leaves when it is saturated or has no active neighbor left.

Two backends compute the same fixed point:

``numpy``
    Each node's adjacency is pre-sorted by preference once, and a per-node
    pointer skips neighbors that have left. A round is a handful of vector
    operations over the active nodes.
``python``
    Straightforward per-node scan of the remaining neighbors each round.
    Intended for small graphs and as a cross-check of the vector code.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .graph import WeightedGraph

TIE_RULES = ("id", "left")
BACKENDS = ("auto", "numpy", "python")
_AUTO_PYTHON_MAX_EDGES = 64


@dataclass
class MatchingOutcome:
    """Greedy result: matched pairs with their unit counts and round statistics."""

    n: int
    i: np.ndarray
    j: np.ndarray
    units: np.ndarray
    weights: np.ndarray
    rounds: int
    multiunit: bool = False
    trace: list[tuple[int, int, int]] | None = field(default=None, repr=False)
    info: dict = field(default_factory=dict, repr=False)

    @property
    def total_weight(self) -> float:
        return float(np.dot(self.weights, self.units)) if self.units.size else 0.0

    @property
    def matched_edges(self) -> list[tuple[int, int]]:
        return list(zip(self.i.tolist(), self.j.tolist()))

    @property
    def allocations(self) -> list[tuple[int, int, int]]:
        return list(zip(self.i.tolist(), self.j.tolist(), self.units.tolist()))

    @property
    def partner(self) -> list[list[tuple[int, int]]]:
        out: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        for a, b, x in self.allocations:
            out[a].append((b, x))
            out[b].append((a, x))
        return out

    @property
    def mate(self) -> np.ndarray:
        """Partner of each node (``-1`` when unmatched); single-unit view."""
        mate = np.full(self.n, -1, dtype=np.int64)
        mate[self.i] = self.j
        mate[self.j] = self.i
        return mate

    def node_weight(self) -> np.ndarray:
        """Per-node share: half the weight of every unit it trades."""
        half = 0.5 * self.weights * self.units
        out = np.zeros(self.n)
        np.add.at(out, self.i, half)
        np.add.at(out, self.j, half)
        return out

    def to_dict(self) -> dict:
        edges = [[a, b] for a, b in self.matched_edges]
        out = {"matched_edges": edges, "total_weight": self.total_weight,
               "rounds": self.rounds}
        if self.multiunit:
            out["units"] = self.units.tolist()
        out.update(self.info)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def subset(self, keep: np.ndarray) -> "MatchingOutcome":
        keep = np.asarray(keep, dtype=bool)
        return MatchingOutcome(self.n, self.i[keep], self.j[keep], self.units[keep],
                               self.weights[keep], self.rounds, self.multiunit, self.trace,
                               dict(self.info))

    def trace_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["round", "proposals", "matches"])
        for row in self.trace or []:
            writer.writerow(row)
        return buf.getvalue()


def check_outcome(graph: WeightedGraph, outcome: MatchingOutcome) -> None:
    """Raise ``AssertionError`` unless the outcome is a feasible allocation on ``graph``."""
    lookup = graph.weight_lookup()
    cap = (np.ones(graph.n, dtype=np.int64) if graph.quantities is None or not outcome.multiunit
           else graph.quantities)
    used = np.zeros(graph.n, dtype=np.int64)
    seen = set()
    total = 0.0
    for a, b, x in outcome.allocations:
        key = (min(a, b), max(a, b))
        assert key in lookup, f"matched pair {key} is not an edge"
        assert key not in seen, f"pair {key} listed twice"
        assert x >= 1
        seen.add(key)
        used[a] += x
        used[b] += x
        total += lookup[key] * x
    assert np.all(used <= cap), "capacity violated"
    assert abs(total - outcome.total_weight) <= 1e-9 * max(1.0, abs(total))


def _preference_order(graph: WeightedGraph, tie_rule: str):
    """Directed adjacency sorted per source node by descending preference."""
    m = graph.m
    src = np.concatenate([graph.u, graph.v])
    dst = np.concatenate([graph.v, graph.u])
    eid = np.concatenate([np.arange(m), np.arange(m)])
    rank = graph.weight_rank[eid]
    prio = dst if tie_rule == "id" else -dst
    order = np.lexsort((-prio, -rank, src))
    indptr = np.zeros(graph.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=graph.n), out=indptr[1:])
    return indptr, dst[order], eid[order]


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("GREEDYMATCH_WORKERS", "1")))
    except ValueError:
        return 1


def _greedy_numpy(graph: WeightedGraph, caps: np.ndarray, tie_rule: str, workers: int,
                  trace: bool):
    n = graph.n
    indptr, nbr, eid = _preference_order(graph, tie_rule)
    ptr = indptr[:-1].copy()
    end = indptr[1:]
    resid = caps.astype(np.int64).copy()
    active = np.flatnonzero((end > ptr) & (resid > 0))
    propose = np.full(n, -1, dtype=np.int64)
    out_i, out_j, out_e, out_x = [], [], [], []
    rounds = 0
    rows = [] if trace else None

    def advance(idx: np.ndarray) -> None:
        # skip neighbors that are saturated; writes only ptr[idx]
        cur = idx
        while cur.size:
            p = ptr[cur]
            ok = p < end[cur]
            dead = np.zeros(cur.size, dtype=bool)
            dead[ok] = resid[nbr[p[ok]]] == 0
            cur = cur[dead]
            ptr[cur] += 1

    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        while True:
            if pool is not None and active.size >= 4 * workers:
                list(pool.map(advance, np.array_split(active, workers)))
            else:
                advance(active)
            active = active[ptr[active] < end[active]]
            if active.size == 0:
                break
            rounds += 1
            target = nbr[ptr[active]]
            propose[active] = target
            mutual = propose[target] == active
            a = active[mutual & (active < target)]
            b = propose[a]
            e = eid[ptr[a]]
            x = np.minimum(resid[a], resid[b])
            resid[a] -= x
            resid[b] -= x
            propose[active] = -1
            out_i.append(a)
            out_j.append(b)
            out_e.append(e)
            out_x.append(x)
            if rows is not None:
                rows.append((rounds, int(active.size), int(a.size)))
            active = active[resid[active] > 0]
    finally:
        if pool is not None:
            pool.shutdown()

    cat = (lambda parts: np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64))
    return cat(out_i), cat(out_j), cat(out_e), cat(out_x), rounds, rows


def _greedy_python(graph: WeightedGraph, caps: np.ndarray, tie_rule: str, trace: bool):
    n = graph.n
    rank = graph.weight_rank.tolist()
    sign = 1 if tie_rule == "id" else -1
    adj: list[list[tuple[int, int, int]]] = [[] for _ in range(n)]
    for e, (a, b) in enumerate(zip(graph.u.tolist(), graph.v.tolist())):
        adj[a].append((rank[e], sign * b, e))
        adj[b].append((rank[e], sign * a, e))
    resid = [int(c) for c in caps]
    used_edge = set()
    result = []
    rounds = 0
    rows = [] if trace else None
    while True:
        proposal = {}
        for a in range(n):
            if resid[a] == 0:
                continue
            best = None
            for r, p, e in adj[a]:
                b = sign * p
                if resid[b] == 0 or e in used_edge:
                    continue
                if best is None or (r, p) > best[:2]:
                    best = (r, p, e, b)
            if best is not None:
                proposal[a] = (best[3], best[2])
        if not proposal:
            break
        rounds += 1
        matched = 0
        for a, (b, e) in proposal.items():
            if a < b and proposal.get(b, (None,))[0] == a:
                x = min(resid[a], resid[b])
                resid[a] -= x
                resid[b] -= x
                used_edge.add(e)
                result.append((a, b, e, x))
                matched += 1
        if rows is not None:
            rows.append((rounds, len(proposal), matched))
    result.sort(key=lambda t: t[2])
    cols = list(zip(*result)) if result else [(), (), (), ()]
    arr = [np.asarray(c, dtype=np.int64) for c in cols]
    return arr[0], arr[1], arr[2], arr[3], rounds, rows


def _run(graph: WeightedGraph, caps: np.ndarray, multiunit: bool, tie_rule: str, backend: str,
         workers: int | None, trace: bool) -> MatchingOutcome:
    if tie_rule not in TIE_RULES:
        raise InvalidParameterError(f"tie_rule must be one of {TIE_RULES}, got {tie_rule!r}")
    if backend not in BACKENDS:
        raise InvalidParameterError(f"backend must be one of {BACKENDS}, got {backend!r}")
    if backend == "auto":
        backend = "python" if graph.m <= _AUTO_PYTHON_MAX_EDGES else "numpy"
    if backend == "python":
        i, j, e, x, rounds, rows = _greedy_python(graph, caps, tie_rule, trace)
    else:
        workers = _default_workers() if workers is None else max(1, int(workers))
        i, j, e, x, rounds, rows = _greedy_numpy(graph, caps, tie_rule, workers, trace)
        order = np.argsort(e, kind="stable")
        i, j, e, x = i[order], j[order], e[order], x[order]
    return MatchingOutcome(graph.n, i, j, x, graph.w[e], rounds, multiunit=multiunit,
                           trace=rows)


def greedy_match(graph: WeightedGraph, *, tie_rule: str = "id", backend: str = "auto",
                 workers: int | None = None, trace: bool = False) -> MatchingOutcome:
    """Single-unit greedy matching.

    ``tie_rule="id"`` prefers the higher neighbor id among equal weights;
    ``"left"`` prefers the lower id (left neighbor on a line, smaller index
    on a grid). Quantities on the graph, if any, are ignored. The empty graph
    gives an empty matching with ``rounds == 0``.
    """
    if graph.quantities is not None and np.any(graph.quantities != 1):
        raise InvalidInputError("graph carries quantities > 1; use greedy_match_multiunit")
    caps = np.ones(graph.n, dtype=np.int64)
    return _run(graph, caps, False, tie_rule, backend, workers, trace)


def greedy_match_multiunit(graph: WeightedGraph, *, tie_rule: str = "id", backend: str = "auto",
                           workers: int | None = None, trace: bool = False) -> MatchingOutcome:
    """Greedy allocation with per-node capacities ``graph.quantities``.

    A mutual proposal on ``(i, j)`` trades ``min`` of the two residual
    capacities; saturated nodes leave, the others keep proposing.
    """
    if graph.quantities is None:
        raise InvalidInputError("multi-unit matching needs per-node quantities")
    return _run(graph, np.asarray(graph.quantities), True, tie_rule, backend, workers, trace)
