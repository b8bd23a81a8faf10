"""Seeded random generators for every graph family used in the experiments.

Each generator is a pure function of its arguments: the same inputs and seed
give a bit-identical graph.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidParameterError, InvalidSizeError, ParseError
from .graph import WeightedGraph, WeightModel

FAMILIES = ("line", "grid2d", "gnp", "geometric", "caching")


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def _weights(model: WeightModel, rng: np.random.Generator, m: int):
    level = model.sample_levels(rng, m)
    return np.asarray(model.values)[level], level


def generate_line(n: int, weight_model: WeightModel, seed: int) -> WeightedGraph:
    """Path ``0-1-...-(n-1)`` with i.i.d. edge weights."""
    if n < 2:
        raise InvalidSizeError(f"line needs n >= 2, got {n}")
    rng = _rng(seed)
    w, level = _weights(weight_model, rng, n - 1)
    idx = np.arange(n - 1, dtype=np.int64)
    return WeightedGraph(n, idx, idx + 1, w, level=level, family="line", validate=False)


def generate_grid2d(side: int, weight_model: WeightModel, seed: int) -> WeightedGraph:
    """``side x side`` lattice; node id is ``row * side + col``."""
    if side < 2:
        raise InvalidSizeError(f"grid needs side >= 2, got {side}")
    ids = np.arange(side * side, dtype=np.int64).reshape(side, side)
    hu, hv = ids[:, :-1].ravel(), ids[:, 1:].ravel()
    vu, vv = ids[:-1, :].ravel(), ids[1:, :].ravel()
    u = np.concatenate([hu, vu])
    v = np.concatenate([hv, vv])
    order = np.lexsort((v, u))
    u, v = u[order], v[order]
    rng = _rng(seed)
    w, level = _weights(weight_model, rng, u.size)
    return WeightedGraph(side * side, u, v, w, level=level, family="grid2d", validate=False)


def _decode_pairs(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # pair index k = j*(j-1)/2 + i with 0 <= i < j
    j = ((1.0 + np.sqrt(1.0 + 8.0 * k.astype(np.float64))) / 2.0).astype(np.int64)
    j -= (j * (j - 1) // 2) > k
    j += ((j + 1) * j // 2) <= k
    i = k - j * (j - 1) // 2
    return i, j


def _sample_pairs(n: int, p: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    total = n * (n - 1) // 2
    if p >= 1.0:
        k = np.arange(total, dtype=np.int64)
    else:
        m = int(rng.binomial(total, p))
        if m > total // 4:
            k = np.sort(rng.choice(total, size=m, replace=False).astype(np.int64))
        else:
            k = np.unique(rng.integers(0, total, size=m, dtype=np.int64))
            while k.size < m:
                extra = rng.integers(0, total, size=m - k.size, dtype=np.int64)
                k = np.unique(np.concatenate([k, extra]))
    i, j = _decode_pairs(k)
    order = np.lexsort((j, i))
    return i[order], j[order]


def generate_gnp(n: int, p: float, weight_model: WeightModel, seed: int) -> WeightedGraph:
    """Erdos-Renyi ``G(n, p)``: every unordered pair is an edge with probability ``p``.

    The edge count is drawn from ``Binomial(n(n-1)/2, p)`` and the edge set is a
    uniform subset of that size, which is the same distribution as independent
    coin flips per pair.
    """
    if n < 2:
        raise InvalidSizeError(f"gnp needs n >= 2, got {n}")
    if not (0.0 < p <= 1.0):
        raise InvalidParameterError(f"gnp needs 0 < p <= 1, got {p}")
    rng = _rng(seed)
    u, v = _sample_pairs(n, p, rng)
    w, level = _weights(weight_model, rng, u.size)
    return WeightedGraph(n, u, v, w, level=level, family="gnp", validate=False)


def uniform_disk(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    theta = 2.0 * np.pi * rng.random(n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def range_pairs(coords: np.ndarray, range_l: float, groups=None) -> tuple[np.ndarray, np.ndarray]:
    """All pairs ``i < j`` at Euclidean distance strictly below ``range_l``."""
    if len(coords) < 2 or range_l <= 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    tree = cKDTree(coords)
    pairs = tree.query_pairs(r=range_l, output_type="ndarray").astype(np.int64)
    if pairs.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    i, j = np.minimum(pairs[:, 0], pairs[:, 1]), np.maximum(pairs[:, 0], pairs[:, 1])
    dist = np.hypot(*(coords[i] - coords[j]).T)
    keep = dist < range_l
    if groups is not None:
        groups = np.asarray(groups)
        keep &= groups[i] == groups[j]
    i, j = i[keep], j[keep]
    order = np.lexsort((j, i))
    return i[order], j[order]


def generate_geometric(n: int, radius_r: float, range_l: float,
                       weight_source: WeightModel, seed: int) -> WeightedGraph:
    """Users uniform on a disk of radius ``radius_r``; edge iff distance < ``range_l``."""
    if n < 2:
        raise InvalidSizeError(f"geometric needs n >= 2, got {n}")
    if not (radius_r > 0 and range_l > 0):
        raise InvalidParameterError("geometric needs R > 0 and L > 0")
    rng = _rng(seed)
    coords = uniform_disk(n, radius_r, rng)
    u, v = range_pairs(coords, range_l)
    w, level = _weights(weight_source, rng, u.size)
    return WeightedGraph(n, u, v, w, level=level, coords=coords, family="geometric",
                         meta={"R": float(radius_r), "L": float(range_l)}, validate=False)


# caching case study

@dataclass(frozen=True)
class LocationRecord:
    user_id: str
    x: float
    y: float
    floor: int | None = None


def parse_locations(text: str) -> list[LocationRecord]:
    """Parse CSV with header ``user_id,x,y[,floor]`` (coordinates in meters)."""
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise ParseError("empty location file", 1)
    header = [h.strip().lower() for h in rows[0]]
    if header[:3] != ["user_id", "x", "y"] or len(header) > 4 or (
            len(header) == 4 and header[3] != "floor"):
        raise ParseError("header must be user_id,x,y[,floor]", 1)
    has_floor = len(header) == 4
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
        try:
            x, y = float(row[1]), float(row[2])
            floor = int(row[3]) if has_floor else None
        except ValueError:
            raise ParseError(f"cannot parse record {row!r}", lineno) from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ParseError("coordinates must be finite", lineno)
        out.append(LocationRecord(row[0].strip(), x, y, floor))
    return out


def read_locations(path: str | Path) -> list[LocationRecord]:
    return parse_locations(Path(path).read_text())


def synthetic_locations(n_users: int = 300, seed: int = 0, *, floors: int = 3,
                        width: float = 80.0, depth: float = 40.0,
                        hotspots: int = 6) -> list[LocationRecord]:
    """Clustered users on a multi-storey floor plan.

    Stand-in for indoor positioning traces: a few hundred users per snapshot,
    three floors of an ``width x depth`` meter building, half of the users
    gathered around per-floor hotspots (lecture rooms, cafeteria) and the rest
    spread uniformly.
    """
    rng = _rng(seed)
    floor = rng.integers(0, floors, size=n_users)
    centers = np.column_stack([rng.uniform(0, width, size=(floors, hotspots)).ravel(),
                               rng.uniform(0, depth, size=(floors, hotspots)).ravel()])
    clustered = rng.random(n_users) < 0.5
    which = floor * hotspots + rng.integers(0, hotspots, size=n_users)
    jitter = rng.normal(0.0, 4.0, size=(n_users, 2))
    pos = np.where(clustered[:, None], centers[which] + jitter,
                   np.column_stack([rng.uniform(0, width, n_users), rng.uniform(0, depth, n_users)]))
    pos[:, 0] = np.clip(pos[:, 0], 0, width)
    pos[:, 1] = np.clip(pos[:, 1], 0, depth)
    return [LocationRecord(f"u{i:04d}", float(x), float(y), int(f))
            for i, ((x, y), f) in enumerate(zip(pos, floor))]


def locations_to_csv(records: Sequence[LocationRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    with_floor = any(r.floor is not None for r in records)
    writer.writerow(["user_id", "x", "y", "floor"] if with_floor else ["user_id", "x", "y"])
    for r in records:
        row = [r.user_id, repr(r.x), repr(r.y)]
        if with_floor:
            row.append(r.floor)
        writer.writerow(row)
    return buf.getvalue()


def random_caches(n: int, library_size: int, cache_size: int, rng) -> np.ndarray:
    """Boolean ``(n, library_size)`` membership matrix, one uniform subset per user."""
    keys = rng.random((n, library_size))
    chosen = np.argsort(keys, axis=1)[:, :cache_size]
    member = np.zeros((n, library_size), dtype=bool)
    np.put_along_axis(member, chosen, True, axis=1)
    return member


@dataclass
class CachingInstance:
    graph: WeightedGraph
    caches: np.ndarray = field(repr=False)


def ingest_caching_instance(location_records: Iterable[LocationRecord], file_library_size: int,
                            cache_size: int, range_l: float, seed: int,
                            *, return_caches: bool = False):
    """Build the collaborative-caching graph.

    Each user caches a uniform ``cache_size``-subset of ``{1..file_library_size}``.
    Two users are adjacent when they are closer than ``range_l`` meters, on the
    same floor (if floors are given) and hold different cache sets; the weight
    is the size of the symmetric difference of their caches.
    """
    records = list(location_records)
    if not (file_library_size >= cache_size >= 1):
        raise InvalidParameterError("need file_library_size >= cache_size >= 1")
    n = len(records)
    coords = np.array([[r.x, r.y] for r in records], dtype=float).reshape(n, 2)
    floors = None
    if any(r.floor is not None for r in records):
        floors = np.array([-1 if r.floor is None else r.floor for r in records])
    rng = _rng(seed)
    caches = random_caches(n, file_library_size, cache_size, rng)
    u, v = range_pairs(coords, range_l, floors)
    w = (caches[u] ^ caches[v]).sum(axis=1).astype(float)
    keep = w > 0
    g = WeightedGraph(n, u[keep], v[keep], w[keep], coords=coords, family="caching",
                      meta={"L": float(range_l)}, validate=False)
    if return_caches:
        return CachingInstance(g, caches)
    return g


def generate(family: str, weight_model: WeightModel | None, seed: int, **params) -> WeightedGraph:
    """Dispatch on family name with keyword size parameters.

    ``line``: ``n``; ``grid2d``: ``side``; ``gnp``: ``n`` and ``p`` or ``d``
    (``p = d / n``); ``geometric``: ``n``, ``R``, ``L``; ``caching``:
    ``records`` (or ``n_users`` for a synthetic snapshot), ``L``, optional
    ``library`` and ``cache``.
    """
    if family == "line":
        return generate_line(int(params["n"]), weight_model, seed)
    if family == "grid2d":
        return generate_grid2d(int(params["side"]), weight_model, seed)
    if family == "gnp":
        n = int(params["n"])
        p = params.get("p")
        if p is None:
            p = float(params["d"]) / n
        return generate_gnp(n, float(p), weight_model, seed)
    if family == "geometric":
        return generate_geometric(int(params["n"]), float(params["R"]), float(params["L"]),
                                  weight_model, seed)
    if family == "caching":
        records = params.get("records")
        if records is None:
            records = synthetic_locations(int(params.get("n_users", 300)),
                                          int(params.get("location_seed", 0)))
        return ingest_caching_instance(records, int(params.get("library", 10)),
                                       int(params.get("cache", 3)), float(params["L"]), seed)
    raise InvalidParameterError(f"unknown family {family!r}; expected one of {FAMILIES}")
