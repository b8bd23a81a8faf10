"""Exact maximum-weight matching oracles for small or structured graphs."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, SizeLimitError, WrongFamilyError
from .graph import WeightedGraph

EXACT_METHODS = ("path_dp", "tree_dp", "exhaustive")
BOUND_METHODS = ("decomposition_bound", "neighbor_max_bound", "multiunit_bound")


@dataclass
class OptimalResult:
    total_weight: float
    method: str
    matched_edges: list[tuple[int, int]] | None = None
    units: list[int] | None = None

    def to_dict(self) -> dict:
        out: dict = {"method": self.method, "total_weight": self.total_weight}
        if self.matched_edges is not None:
            out["matched_edges"] = [list(e) for e in self.matched_edges]
        if self.units is not None:
            out["units"] = list(self.units)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _components(graph: WeightedGraph) -> np.ndarray:
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    a = coo_matrix((np.ones(graph.m), (graph.u, graph.v)), shape=(graph.n, graph.n))
    return connected_components(a, directed=False)[1]


def is_forest(graph: WeightedGraph) -> bool:
    if graph.m == 0:
        return True
    if graph.m >= graph.n:
        return False
    if graph.m <= 256:
        # union-find; cheaper than building a sparse matrix for tiny graphs
        parent = list(range(graph.n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in zip(graph.u.tolist(), graph.v.tolist()):
            ra, rb = find(a), find(b)
            if ra == rb:
                return False
            parent[ra] = rb
        return True
    comp = _components(graph)
    return graph.m == graph.n - np.unique(comp).size


def path_sequences(graph: WeightedGraph) -> list[tuple[list[int], list[int]]]:
    """Decompose a linear forest into ``(nodes, edge_ids)`` walks, one per path.

    Raises :class:`WrongFamilyError` when some node has degree > 2 or a cycle
    exists. Isolated nodes are skipped.
    """
    if graph.m and graph.degree.max() > 2:
        raise WrongFamilyError("not a path: some node has degree > 2")
    if not is_forest(graph):
        raise WrongFamilyError("not a path: graph contains a cycle")
    # fast route for the canonical 0-1-2-... layout
    if graph.m == graph.n - 1 and np.array_equal(graph.u, np.arange(graph.m)) and \
            np.array_equal(graph.v, graph.u + 1):
        return [(list(range(graph.n)), list(range(graph.m)))]
    adjacency = graph.adjacency
    indptr, nbr, eid = graph.csr
    eid = eid.tolist()
    seen = np.zeros(graph.n, dtype=bool)
    out = []
    for start in np.flatnonzero(graph.degree == 1).tolist():
        if seen[start]:
            continue
        nodes, edges = [start], []
        seen[start] = True
        prev, cur = -1, start
        while True:
            nxt = [(k, x) for k, x in enumerate(adjacency[cur]) if x != prev]
            if not nxt:
                break
            k, x = nxt[0]
            edges.append(eid[indptr[cur] + k])
            prev, cur = cur, x
            nodes.append(cur)
            seen[cur] = True
        out.append((nodes, edges))
    return out


def _path_dp(w: list[float]) -> tuple[float, list[int]]:
    """Max-weight matching on a path with edge weights ``w``; returns chosen positions."""
    m = len(w)
    best = [0.0] * (m + 1)
    for t in range(1, m + 1):
        take = w[t - 1] + (best[t - 2] if t >= 2 else 0.0)
        best[t] = take if take > best[t - 1] else best[t - 1]
    chosen = []
    t = m
    while t >= 1:
        take = w[t - 1] + (best[t - 2] if t >= 2 else 0.0)
        if take > best[t - 1]:
            chosen.append(t - 1)
            t -= 2
        else:
            t -= 1
    chosen.reverse()
    return best[m], chosen


def optimal_path_dp(graph: WeightedGraph) -> OptimalResult:
    """Exact optimum on a path (or a disjoint union of paths) by dynamic programming."""
    w = graph.w.tolist()
    total = 0.0
    edges = []
    for _, eids in path_sequences(graph):
        value, chosen = _path_dp([w[e] for e in eids])
        total += value
        edges.extend(eids[c] for c in chosen)
    edges.sort()
    return OptimalResult(total, "path_dp",
                         [(int(graph.u[e]), int(graph.v[e])) for e in edges])


def optimal_tree_dp(graph: WeightedGraph) -> OptimalResult:
    """Exact optimum on a forest.

    ``free[x]`` is the best value in the subtree of ``x`` with ``x`` unmatched
    to its children, ``used[x]`` allows ``x`` to match one child.
    """
    if not is_forest(graph):
        raise WrongFamilyError("not a forest: graph contains a cycle")
    n = graph.n
    adjacency = graph.adjacency
    lookup = graph.weight_lookup()
    parent = [-1] * n
    order = []
    seen = [False] * n
    for root in range(n):
        if seen[root]:
            continue
        seen[root] = True
        stack = [root]
        while stack:
            x = stack.pop()
            order.append(x)
            for y in adjacency[x]:
                if not seen[y]:
                    seen[y] = True
                    parent[y] = x
                    stack.append(y)
    free = [0.0] * n
    best = [0.0] * n
    pick = [-1] * n
    for x in reversed(order):
        base = 0.0
        for y in adjacency[x]:
            if y != parent[x]:
                base += best[y]
        free[x] = base
        best[x] = base
        for y in adjacency[x]:
            if y == parent[x]:
                continue
            gain = lookup[(min(x, y), max(x, y))] + free[y] - best[y]
            if base + gain > best[x]:
                best[x] = base + gain
                pick[x] = y
    total = sum(best[r] for r in range(n) if parent[r] == -1)
    # recover the edge set top-down
    edges = []
    matched_down = [False] * n
    for x in order:
        if matched_down[x]:
            continue
        y = pick[x]
        if y != -1:
            edges.append((min(x, y), max(x, y)))
            matched_down[y] = True
    edges.sort()
    return OptimalResult(total, "tree_dp", edges)


def optimal_exhaustive(graph: WeightedGraph, max_edges: int = 22) -> OptimalResult:
    """Exact optimum by branch and bound for graphs with at most ``max_edges`` edges.

    Branches on the lowest-index free node: leave it unmatched or match it to
    one of its free neighbors. A branch is cut when its value plus half the
    sum of the free nodes' largest incident weights cannot beat the incumbent.
    """
    if graph.m > max_edges:
        raise SizeLimitError(f"{graph.m} edges exceeds the exhaustive cap of {max_edges}")
    n = graph.n
    adj: list[list[tuple[float, int]]] = [[] for _ in range(n)]
    for a, b, c in graph.edges:
        if c > 0:
            adj[a].append((c, b))
            adj[b].append((c, a))
    for lst in adj:
        lst.sort(reverse=True)
    half = [0.5 * lst[0][0] if lst else 0.0 for lst in adj]
    nodes = [x for x in range(n) if adj[x]]
    state = {"best": 0.0, "edges": []}
    chosen: list[tuple[int, int]] = []

    def search(free: int, value: float, rem: float, pos: int) -> None:
        if value > state["best"] + 1e-12:
            state["best"] = value
            state["edges"] = list(chosen)
        while pos < len(nodes) and not (free >> nodes[pos]) & 1:
            pos += 1
        if pos == len(nodes) or value + rem <= state["best"] + 1e-12:
            return
        x = nodes[pos]
        rest = free & ~(1 << x)
        for c, y in adj[x]:
            if (rest >> y) & 1:
                chosen.append((min(x, y), max(x, y)))
                search(rest & ~(1 << y), value + c, rem - half[x] - half[y], pos + 1)
                chosen.pop()
        search(rest, value, rem - half[x], pos + 1)

    search(sum(1 << x for x in nodes), 0.0, sum(half), 0)
    return OptimalResult(state["best"], "exhaustive", sorted(state["edges"]))


def optimal_multiunit_exhaustive(graph: WeightedGraph, max_total_quantity: int = 18
                                 ) -> OptimalResult:
    """Exact optimum of the multi-unit allocation problem by DFS over integer allocations."""
    if graph.quantities is None:
        raise InvalidInputError("multi-unit optimum needs per-node quantities")
    q = graph.quantities.tolist()
    if sum(q) > max_total_quantity:
        raise SizeLimitError(f"total quantity {sum(q)} exceeds the cap of {max_total_quantity}")
    edges = sorted(graph.edges, key=lambda e: -e[2])
    resid = list(q)
    alloc = [0] * len(edges)
    state = {"best": -1.0, "alloc": list(alloc)}
    # suffix bound: every remaining edge at its static capacity
    cap = [w * min(q[a], q[b]) for a, b, w in edges]
    suffix = [0.0] * (len(edges) + 1)
    for t in range(len(edges) - 1, -1, -1):
        suffix[t] = suffix[t + 1] + cap[t]

    def search(t: int, value: float) -> None:
        if value > state["best"] + 1e-12:
            state["best"] = value
            state["alloc"] = list(alloc)
        if t == len(edges) or value + suffix[t] <= state["best"] + 1e-12:
            return
        a, b, w = edges[t]
        for x in range(min(resid[a], resid[b]), -1, -1):
            alloc[t] = x
            resid[a] -= x
            resid[b] -= x
            search(t + 1, value + w * x)
            resid[a] += x
            resid[b] += x
        alloc[t] = 0

    search(0, 0.0)
    picked = sorted((min(a, b), max(a, b), x) for (a, b, _), x in zip(edges, state["alloc"]) if x)
    return OptimalResult(max(state["best"], 0.0), "exhaustive",
                         [(a, b) for a, b, _ in picked], [x for _, _, x in picked])


def optimal(graph: WeightedGraph, method: str = "auto", **kwargs) -> OptimalResult:
    """Dispatch to an exact oracle; ``auto`` picks the cheapest applicable one."""
    if method == "auto":
        if graph.m == 0 or (graph.degree.max() <= 2 and is_forest(graph)):
            method = "path_dp"
        elif is_forest(graph):
            method = "tree_dp"
        else:
            method = "exhaustive"
    if method == "path_dp":
        return optimal_path_dp(graph)
    if method == "tree_dp":
        return optimal_tree_dp(graph)
    if method == "exhaustive":
        if graph.quantities is not None and np.any(graph.quantities != 1):
            return optimal_multiunit_exhaustive(graph, **kwargs)
        return optimal_exhaustive(graph, **kwargs)
    raise InvalidInputError(f"unknown exact method {method!r}; expected one of {EXACT_METHODS}")
