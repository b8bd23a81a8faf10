"""Independent reference computations used by the tests.

Nothing here imports the package's solvers or formulas. Each oracle is a
direct enumeration or numerical integration, chosen to be obviously
correct rather than fast.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import integrate


def brute_force_matching(n, edges):
    """Maximum total weight over every matching, by recursion on the first edge."""
    edges = list(edges)

    def best(k, used):
        if k == len(edges):
            return 0.0
        a, b, w = edges[k]
        skip = best(k + 1, used)
        if a in used or b in used:
            return skip
        return max(skip, w + best(k + 1, used | {a, b}))

    return best(0, frozenset())


def brute_force_multiunit(n, edges, q):
    """Maximum of sum w*x over integer x with per-node sum x <= q."""
    edges = list(edges)

    def best(k, resid):
        if k == len(edges):
            return 0.0
        a, b, w = edges[k]
        out = 0.0
        for x in range(min(resid[a], resid[b]) + 1):
            r = list(resid)
            r[a] -= x
            r[b] -= x
            out = max(out, w * x + best(k + 1, tuple(r)))
        return out

    return best(0, tuple(int(x) for x in q))


def is_matching(n, pairs):
    seen = set()
    for a, b in pairs:
        if a in seen or b in seen:
            return False
        seen.update((a, b))
    return True


def line_slope_by_prefixes(values, probs):
    """Per-user greedy weight on a long random line with left priority.

    Scan from the left end. Let ``i`` be the first edge whose right neighbor
    is not heavier, so ``w_1 < ... < w_i >= w_{i+1}``. Edge ``i`` is matched,
    which makes ``i-2, i-4, ...`` locally maximal in turn. The first ``i+1``
    edges are then settled, so the greedy total satisfies a renewal equation
    with reward ``w_i + w_{i-2} + ...`` and length ``i + 1``. The slope is the
    mean reward over the mean length.
    """
    K = len(values)
    ER = EL = 0.0
    for i in range(1, K + 1):
        for idx in itertools.combinations(range(K), i):
            # idx is strictly increasing, so this is a valid rising prefix
            p_prefix = math.prod(probs[k] for k in idx)
            # next edge must be no heavier than w_i (always true when i = K)
            p_stop = sum(probs[k] for k in range(idx[-1] + 1))
            p = p_prefix * p_stop
            reward = sum(values[idx[t]] for t in range(i - 1, -1, -2))
            ER += p * reward
            EL += p * (i + 1)
    return ER / EL


def lens_area(r, L, R):
    """Area of the intersection of disks radius ``L`` and ``R`` with centers ``r`` apart."""
    if r + L <= R:
        return math.pi * L * L
    if r >= R + L:
        return 0.0
    if r + R <= L:
        return math.pi * R * R
    a = L * L * math.acos((r * r + L * L - R * R) / (2 * r * L))
    b = R * R * math.acos((r * r + R * R - L * L) / (2 * r * R))
    c = 0.5 * math.sqrt((-r + L + R) * (r + L - R) * (r - L + R) * (r + L + R))
    return a + b - c


def disk_mean_degree(n, R, L):
    """Expected degree in the geometric graph with ``n`` uniform points on a radius-``R`` disk."""
    prob, _ = integrate.quad(lambda r: (2 * r / R**2) * lens_area(r, L, R) / (math.pi * R**2),
                             0.0, R, limit=200)
    return (n - 1) * prob


def random_small_graph(rng, max_edges=22):
    """A random instance from a mix of families, at most ``max_edges`` edges.

    Weights come either from a two- or three-level support (many ties) or
    from a continuous draw.
    """
    kind = rng.integers(6)
    if kind == 0:  # path
        m = int(rng.integers(1, max_edges + 1))
        u = np.arange(m)
        v = u + 1
        n = m + 1
    elif kind == 1:  # random tree (Prufer-free: attach each node to an earlier one)
        n = int(rng.integers(2, max_edges + 2))
        v = np.arange(1, n)
        u = np.array([rng.integers(0, k) for k in range(1, n)])
    elif kind == 2:  # gnp
        n = int(rng.integers(2, 11))
        pairs = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < rng.random()]
        pairs = pairs[:max_edges]
        u = np.array([a for a, _ in pairs], dtype=np.int64)
        v = np.array([b for _, b in pairs], dtype=np.int64)
    elif kind == 3:  # small grid or ladder
        rows = int(rng.integers(2, 4))
        cols = int(rng.integers(2, 5))
        n = rows * cols
        pairs = []
        for r in range(rows):
            for c in range(cols):
                k = r * cols + c
                if c + 1 < cols:
                    pairs.append((k, k + 1))
                if r + 1 < rows:
                    pairs.append((k, k + cols))
        u = np.array([a for a, _ in pairs])
        v = np.array([b for _, b in pairs])
    elif kind == 4:  # cycle
        n = int(rng.integers(3, max_edges + 1))
        u = np.arange(n)
        v = (u + 1) % n
    else:  # geometric in the unit square
        n = int(rng.integers(2, 10))
        pts = rng.random((n, 2))
        L = rng.uniform(0.2, 0.7)
        pairs = [(a, b) for a in range(n) for b in range(a + 1, n)
                 if np.hypot(*(pts[a] - pts[b])) < L][:max_edges]
        u = np.array([a for a, _ in pairs], dtype=np.int64)
        v = np.array([b for _, b in pairs], dtype=np.int64)
    m = len(u)
    style = rng.integers(3)
    if style == 0:
        w = rng.choice([1.0, 2.0], size=m)
    elif style == 1:
        w = rng.choice([1.0, 1.5, 4.0], size=m)
    else:
        w = rng.uniform(0.1, 10.0, size=m)
    # random relabeling so ids are not tied to construction order
    perm = rng.permutation(n)
    return n, perm[np.asarray(u, dtype=np.int64)], perm[np.asarray(v, dtype=np.int64)], w, kind
