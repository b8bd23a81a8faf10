"""Weighted sharing graphs and the discrete edge-weight distribution."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError, InvalidParameterError, ParseError


@dataclass(frozen=True)
class WeightModel:
    """Finite support ``values`` (strictly increasing, >= 0) with probabilities ``probs``."""

    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)
        if len(values) < 1:
            raise InvalidParameterError("weight model needs at least one value")
        if len(values) != len(probs):
            raise InvalidParameterError("values and probs must have equal length")
        if values[0] < 0 or any(b <= a for a, b in zip(values, values[1:])):
            raise InvalidParameterError(
                f"values must be non-negative and strictly increasing: {values}")
        if any(not (0.0 < p <= 1.0) for p in probs):
            raise InvalidParameterError(f"probabilities must lie in (0, 1]: {probs}")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise InvalidParameterError(f"probabilities must sum to 1: {probs}")

    @classmethod
    def uniform(cls, values: Sequence[float]) -> "WeightModel":
        k = len(values)
        return cls(tuple(values), (1.0 / k,) * k)

    @classmethod
    def two_level(cls, delta: float, p1: float = 0.5) -> "WeightModel":
        """Weights ``{1, 1 + delta}`` with ``Pr(1) = p1``."""
        return cls((1.0, 1.0 + delta), (p1, 1.0 - p1))

    @classmethod
    def evenly_spaced(cls, k: int, spread: float) -> "WeightModel":
        """Uniform on ``{1, 1 + s, ..., 1 + spread}`` with ``k`` levels."""
        if k == 1:
            return cls((1.0,), (1.0,))
        step = spread / (k - 1)
        return cls.uniform([1.0 + i * step for i in range(k)])

    @property
    def K(self) -> int:
        return len(self.values)

    @property
    def is_uniform(self) -> bool:
        return all(abs(p - 1.0 / self.K) <= 1e-12 for p in self.probs)

    @property
    def mean(self) -> float:
        return math.fsum(v * p for v, p in zip(self.values, self.probs))

    def cdf(self) -> list[float]:
        """``[F_0, F_1, ..., F_K]`` with ``F_k = Pr(w <= v_k)`` and ``F_0 = 0``."""
        out = [0.0]
        acc = 0.0
        for p in self.probs:
            acc += p
            out.append(acc)
        out[-1] = 1.0
        return out

    def sample_levels(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.K == 1:
            return np.zeros(size, dtype=np.int64)
        return rng.choice(self.K, size=size, p=np.asarray(self.probs)).astype(np.int64)

    def to_dict(self) -> dict:
        return {"values": list(self.values), "probs": list(self.probs)}

    @classmethod
    def from_dict(cls, data: dict) -> "WeightModel":
        return cls(tuple(data["values"]), tuple(data["probs"]))

    @classmethod
    def empirical(cls, weights: Iterable[float]) -> "WeightModel":
        """Fit a model to observed weights by relative frequency."""
        vals, counts = np.unique(np.asarray(list(weights), dtype=float), return_counts=True)
        if vals.size == 0:
            raise InvalidInputError("cannot fit a weight model to an empty sample")
        probs = counts / counts.sum()
        probs[-1] = 1.0 - probs[:-1].sum()
        return cls(tuple(vals.tolist()), tuple(probs.tolist()))


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class WeightedGraph:
    """Undirected simple graph on nodes ``0..n-1`` with non-negative edge weights.

    Edges are held as parallel arrays ``u < v`` and ``w``. Node ids are the
    tie-break priority used by the greedy engine. ``level`` optionally records
    the support index of each weight when the graph was drawn from a
    :class:`WeightModel`. ``quantities`` (per-node capacity) and ``coords``
    (per-node planar position in meters) are optional. ``meta`` carries
    generator parameters such as the sharing range ``L``.

    Instances are treated as immutable once built.
    """

    def __init__(self, n: int, u, v, w, *, level=None, quantities=None, coords=None,
                 family: str | None = None, meta: dict | None = None, validate: bool = True):
        self.n = int(n)
        u = np.asarray(u, dtype=np.int64).reshape(-1)
        v = np.asarray(v, dtype=np.int64).reshape(-1)
        w = np.asarray(w, dtype=np.float64).reshape(-1)
        if not (u.shape == v.shape == w.shape):
            raise InvalidInputError("edge arrays must have equal length")
        lo = np.minimum(u, v)
        hi = np.maximum(u, v)
        self.u = _frozen(lo)
        self.v = _frozen(hi)
        self.w = _frozen(w.copy())
        self.level = None if level is None else _frozen(np.asarray(level, dtype=np.int64).copy())
        self.quantities = (None if quantities is None
                           else _frozen(np.asarray(quantities, dtype=np.int64).copy()))
        self.coords = (None if coords is None
                       else _frozen(np.asarray(coords, dtype=np.float64).reshape(-1, 2).copy()))
        self.family = family
        self.meta = dict(meta or {})
        if validate:
            self._validate()

    def _validate(self) -> None:
        if self.n < 0:
            raise InvalidInputError("node count must be non-negative")
        if self.u.size:
            if self.u.min() < 0 or self.v.max() >= self.n:
                raise InvalidInputError("edge endpoint outside 0..n-1")
            if np.any(self.u == self.v):
                raise InvalidInputError("self-loops are not allowed")
            key = self.u * self.n + self.v
            if np.unique(key).size != key.size:
                raise InvalidInputError("duplicate edges are not allowed")
            if np.any(~np.isfinite(self.w)) or np.any(self.w < 0):
                raise InvalidInputError("edge weights must be finite and non-negative")
        if self.quantities is not None:
            if self.quantities.shape != (self.n,):
                raise InvalidInputError("quantities must have one entry per node")
            if np.any(self.quantities < 1):
                raise InvalidInputError("quantities must be >= 1")
        if self.coords is not None and self.coords.shape != (self.n, 2):
            raise InvalidInputError("coords must have shape (n, 2)")
        if self.level is not None and self.level.shape != self.w.shape:
            raise InvalidInputError("level array must match edges")

    # construction helpers

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[float]], **kwargs) -> "WeightedGraph":
        edges = list(edges)
        if edges:
            arr = np.asarray(edges, dtype=np.float64)
            u = arr[:, 0].astype(np.int64)
            v = arr[:, 1].astype(np.int64)
            w = arr[:, 2]
            if np.any(u != arr[:, 0]) or np.any(v != arr[:, 1]):
                raise InvalidInputError("edge endpoints must be integers")
        else:
            u = v = np.zeros(0, dtype=np.int64)
            w = np.zeros(0)
        return cls(n, u, v, w, **kwargs)

    @classmethod
    def path(cls, weights: Sequence[float], **kwargs) -> "WeightedGraph":
        """Path ``0-1-...-len(weights)`` with the given edge weights in order."""
        m = len(weights)
        idx = np.arange(m, dtype=np.int64)
        kwargs.setdefault("family", "line")
        return cls(m + 1, idx, idx + 1, np.asarray(weights, dtype=float), **kwargs)

    def with_quantities(self, quantities) -> "WeightedGraph":
        return WeightedGraph(self.n, self.u, self.v, self.w, level=self.level,
                             quantities=quantities, coords=self.coords, family=self.family,
                             meta=self.meta)

    def with_weights(self, w, level=None) -> "WeightedGraph":
        return WeightedGraph(self.n, self.u, self.v, w, level=level,
                             quantities=self.quantities, coords=self.coords,
                             family=self.family, meta=self.meta, validate=False)

    # derived structure

    @property
    def m(self) -> int:
        return int(self.u.size)

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return list(zip(self.u.tolist(), self.v.tolist(), self.w.tolist()))

    @cached_property
    def degree(self) -> np.ndarray:
        deg = np.bincount(self.u, minlength=self.n) + np.bincount(self.v, minlength=self.n)
        return _frozen(deg.astype(np.int64))

    @cached_property
    def weight_rank(self) -> np.ndarray:
        """Dense rank of each edge weight; equal weights share a rank exactly."""
        if self.level is not None:
            return self.level
        _, inv = np.unique(self.w, return_inverse=True)
        return _frozen(inv.astype(np.int64).reshape(-1))

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(indptr, neighbor, edge_id)`` with both directions of every edge."""
        src = np.concatenate([self.u, self.v])
        dst = np.concatenate([self.v, self.u])
        eid = np.concatenate([np.arange(self.m), np.arange(self.m)])
        order = np.lexsort((dst, src))
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=self.n), out=indptr[1:])
        return _frozen(indptr), _frozen(dst[order]), _frozen(eid[order])

    @cached_property
    def adjacency(self) -> list[list[int]]:
        indptr, nbr, _ = self.csr
        nbr = nbr.tolist()
        return [nbr[indptr[i]:indptr[i + 1]] for i in range(self.n)]

    def weight_lookup(self) -> dict[tuple[int, int], float]:
        return {(a, b): c for a, b, c in self.edges}

    # serialization

    def to_dict(self) -> dict:
        out: dict = {"n": self.n, "edges": [[a, b, c] for a, b, c in self.edges]}
        if self.quantities is not None:
            out["quantities"] = self.quantities.tolist()
        if self.coords is not None:
            out["coords"] = self.coords.tolist()
        if self.family is not None:
            out["family"] = self.family
        if self.meta:
            out["meta"] = self.meta
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "WeightedGraph":
        try:
            n = int(data["n"])
            edges = data.get("edges", [])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed graph document: {exc}") from None
        return cls.from_edges(n, edges, quantities=data.get("quantities"),
                              coords=data.get("coords"), family=data.get("family"),
                              meta=data.get("meta"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["i", "j", "w"])
        for a, b, c in self.edges:
            writer.writerow([a, b, repr(c)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, n: int | None = None) -> "WeightedGraph":
        rows = []
        reader = csv.reader(io.StringIO(text))
        for lineno, row in enumerate(reader, start=1):
            if not row or (lineno == 1 and row[0].strip().lower() == "i"):
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 fields (i,j,w), got {len(row)}", lineno)
            try:
                rows.append((int(row[0]), int(row[1]), float(row[2])))
            except ValueError:
                raise ParseError(f"cannot parse edge {row!r}", lineno) from None
        if n is None:
            n = 1 + max((max(a, b) for a, b, _ in rows), default=-1)
        return cls.from_edges(n, rows)

    def __repr__(self) -> str:
        fam = f", family={self.family!r}" if self.family else ""
        return f"WeightedGraph(n={self.n}, m={self.m}{fam})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        def same(a, b):
            if a is None or b is None:
                return a is None and b is None
            return a.shape == b.shape and bool(np.array_equal(a, b))
        return (self.n == other.n and same(self.u, other.u) and same(self.v, other.v)
                and same(self.w, other.w) and same(self.quantities, other.quantities)
                and same(self.coords, other.coords))

    __hash__ = None  # type: ignore[assignment]


def load_graph(path: str | Path) -> WeightedGraph:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        return WeightedGraph.from_csv(text)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    return WeightedGraph.from_dict(data)


def save_graph(graph: WeightedGraph, path: str | Path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        path.write_text(graph.to_csv())
    else:
        path.write_text(graph.to_json() + "\n")
