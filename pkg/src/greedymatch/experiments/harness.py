"""Reproducible Monte-Carlo harness: configs, per-sample streams and reports.

Sample ``k`` of an experiment with master seed ``s`` draws everything from
``SeedSequence([s, k])``. Results are aggregated in sample order, so the
report does not depend on how samples were scheduled across workers.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .. import __version__
from ..bounds import decomposition_bound_instance, multiunit_bound, neighbor_max_bound
from ..errors import ConfigError
from ..generators import FAMILIES, generate
from ..graph import WeightedGraph, WeightModel
from ..greedy import TIE_RULES, greedy_match, greedy_match_multiunit
from ..optimal import optimal_exhaustive, optimal_path_dp, optimal_tree_dp
from ..stats import MIN_SAMPLES_FOR_NORMAL, mean_ci, mean_of_ratios, ratio_of_means

METRICS = ("pr_vs_bound", "pr_vs_exact", "rounds", "per_user_weight", "failure_curve",
           "dynamic_curve")
BASELINES = ("decomposition", "neighbor_max", "path_dp", "tree_dp", "exhaustive",
             "multiunit_bound")
EXACT_BASELINES = ("path_dp", "tree_dp", "exhaustive")
_BASELINE_FAMILIES = {
    "decomposition": {"line"},
    "path_dp": {"line"},
    "tree_dp": {"line"},
    "multiunit_bound": set(FAMILIES),
    "neighbor_max": set(FAMILIES),
    "exhaustive": set(FAMILIES),
}
CURVE_COLUMNS = ("series", "parameter", "analytic_value", "simulated_value", "ci_halfwidth")


def derive_seed(*parts) -> int:
    """Deterministic 63-bit seed from arbitrary printable parts."""
    digest = hashlib.sha256(json.dumps(parts, sort_keys=True, default=str).encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def sample_seed(master: int, index: int) -> int:
    state = np.random.SeedSequence([int(master), int(index)]).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])


@dataclass
class ExperimentConfig:
    family: str
    params: dict
    weight_model: WeightModel | None = None
    samples: int = 30
    seed: int = 0
    metrics: list[str] = field(default_factory=lambda: ["pr_vs_bound"])
    baseline: str = "decomposition"
    tie_rule: str = "id"
    quantities: list[int] | None = None
    sizes: list[int] | None = None
    workers: int | None = None
    keep_records: bool = False
    neighbor_max_form: str = "expected"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if int(self.samples) < 1:
            raise ConfigError("samples must be >= 1")
        bad = [m for m in self.metrics if m not in METRICS]
        if bad:
            raise ConfigError(f"unknown metrics {bad}; expected a subset of {METRICS}")
        if self.baseline not in BASELINES:
            raise ConfigError(f"unknown baseline {self.baseline!r}; expected one of {BASELINES}")
        if self.family not in _BASELINE_FAMILIES[self.baseline]:
            raise ConfigError(f"baseline {self.baseline!r} is not defined for family "
                              f"{self.family!r}")
        if self.baseline == "multiunit_bound" and not self.quantities:
            raise ConfigError("multiunit_bound baseline needs a quantities list")
        if self.tie_rule not in TIE_RULES:
            raise ConfigError(f"tie_rule must be one of {TIE_RULES}")
        if self.neighbor_max_form not in ("expected", "instance"):
            raise ConfigError("neighbor_max_form must be 'expected' or 'instance'")
        if self.family != "caching" and self.weight_model is None:
            raise ConfigError(f"family {self.family!r} needs a weight model")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["weight_model"] = None if self.weight_model is None else self.weight_model.to_dict()
        out.pop("workers")
        out.pop("keep_records")
        return out

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known - {"values", "probs"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        wm = data.pop("weight_model", None)
        if wm is None and "values" in data:
            values = data.pop("values")
            probs = data.pop("probs", None)
            wm = {"values": values, "probs": probs or [1.0 / len(values)] * len(values)}
        data.pop("values", None)
        data.pop("probs", None)
        if isinstance(wm, dict):
            try:
                wm = WeightModel.from_dict(wm)
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"bad weight model: {exc}") from None
        if "family" not in data:
            raise ConfigError("config needs a 'family'")
        data.setdefault("params", {})
        if isinstance(data.get("metrics"), str):
            data["metrics"] = [data["metrics"]]
        return cls(weight_model=wm, **data)


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text.strip()


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a config from JSON or from a key-value file with an ``[experiment]`` section.

    In the key-value form, values are JSON literals (``samples = 30``,
    ``values = [1, 2]``) and generator parameters live in ``[params]``.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None
        return ExperimentConfig.from_dict(data)
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if "experiment" not in parser:
        raise ConfigError(f"{path}: missing [experiment] section")
    data = {k: _parse_value(v) for k, v in parser["experiment"].items()}
    if "params" in parser:
        data["params"] = {k: _parse_value(v) for k, v in parser["params"].items()}
    return ExperimentConfig.from_dict(data)


@dataclass
class ExperimentReport:
    metrics: dict[str, Any]
    metadata: dict[str, Any]
    records: list[dict] | None = None
    curves: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {"metrics": self.metrics, "metadata": self.metadata}
        if self.records is not None:
            out["records"] = self.records
        if self.curves:
            out["curves"] = self.curves
        if self.warnings:
            out["warnings"] = self.warnings
        return out

    def to_json(self) -> str:
        return json.dumps(_plain(self.to_dict()), sort_keys=True, indent=2)

    def curves_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CURVE_COLUMNS)
        for row in self.curves:
            writer.writerow(["" if row.get(c) is None else _fmt(row.get(c)) for c in CURVE_COLUMNS])
        return buf.getvalue()

    def records_hash(self) -> str:
        blob = json.dumps(_plain(self.records or []), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x)) if math.isfinite(x) else ""
    return x


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def metadata(config_hash: str, seed: int, include_timestamp: bool = False) -> dict:
    meta = {"config_hash": config_hash, "seed": int(seed), "code_version": __version__}
    if include_timestamp:
        meta["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return meta


def summarize(x) -> dict:
    x = np.asarray(x, dtype=float)
    mean, se, half = mean_ci(x)
    return {"mean": mean, "stderr": se, "ci95": half, "min": float(x.min()),
            "max": float(x.max()), "n": int(x.size)}


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("GREEDYMATCH_WORKERS", "1")))
    except ValueError:
        return 1


def map_samples(fn: Callable[[int], dict], count: int, workers: int | None = None) -> list[dict]:
    """Evaluate ``fn(k)`` for ``k < count``; results come back in index order."""
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or count == 1:
        return [fn(k) for k in range(count)]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(fn, range(count), chunksize=max(1, count // (4 * workers))))


# per-sample evaluation

def build_instance(config: ExperimentConfig, seed: int, params: dict | None = None
                   ) -> WeightedGraph:
    params = dict(config.params if params is None else params)
    g = generate(config.family, config.weight_model, seed, **params)
    if config.quantities:
        rng = np.random.default_rng([seed, 1])
        q = rng.choice(np.asarray(config.quantities, dtype=np.int64), size=g.n)
        g = g.with_quantities(q)
    return g


def baseline_value(config: ExperimentConfig, graph: WeightedGraph) -> float:
    b = config.baseline
    if b == "decomposition":
        return decomposition_bound_instance(graph).total_weight
    if b == "neighbor_max":
        if config.neighbor_max_form == "expected" and config.weight_model is not None:
            return neighbor_max_bound(graph, config.weight_model)
        return neighbor_max_bound(graph)
    if b == "multiunit_bound":
        return multiunit_bound(graph)
    if b == "path_dp":
        return optimal_path_dp(graph).total_weight
    if b == "tree_dp":
        return optimal_tree_dp(graph).total_weight
    if b == "exhaustive":
        if graph.quantities is not None and np.any(graph.quantities != 1):
            from ..optimal import optimal_multiunit_exhaustive
            return optimal_multiunit_exhaustive(graph).total_weight
        return optimal_exhaustive(graph).total_weight
    raise ConfigError(f"unknown baseline {b!r}")


def run_greedy(config: ExperimentConfig, graph: WeightedGraph):
    if graph.quantities is not None:
        return greedy_match_multiunit(graph, tie_rule=config.tie_rule)
    return greedy_match(graph, tie_rule=config.tie_rule)


class _PrSample:
    def __init__(self, config: ExperimentConfig):
        self.config = config

    def __call__(self, k: int) -> dict:
        cfg = self.config
        seed = sample_seed(cfg.seed, k)
        g = build_instance(cfg, seed)
        out = run_greedy(cfg, g)
        rec = {"index": k, "n": g.n, "m": g.m, "greedy": out.total_weight,
               "rounds": out.rounds}
        if any(m in cfg.metrics for m in ("pr_vs_bound", "pr_vs_exact")):
            rec["baseline"] = baseline_value(cfg, g)
        return rec


def estimate_pr(config: ExperimentConfig, *, include_timestamp: bool = False) -> ExperimentReport:
    """Ratio-of-means PR of greedy against the configured baseline.

    The mean of per-sample ratios is reported alongside with its own CI.
    """
    if "pr_vs_exact" in config.metrics and config.baseline not in EXACT_BASELINES:
        raise ConfigError(f"pr_vs_exact needs an exact baseline, got {config.baseline!r}")
    notes = []
    if config.samples < MIN_SAMPLES_FOR_NORMAL:
        msg = f"only {config.samples} samples: normal-approximation CI is unreliable"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    records = map_samples(_PrSample(config), config.samples, config.workers)
    greedy = np.array([r["greedy"] for r in records])
    n_users = np.array([r["n"] for r in records], dtype=float)
    metrics: dict[str, Any] = {"greedy_total": summarize(greedy),
                               "per_user_weight": summarize(greedy / n_users),
                               "rounds": summarize([r["rounds"] for r in records])}
    if "baseline" in records[0]:
        base = np.array([r["baseline"] for r in records])
        ratio, half = ratio_of_means(greedy, base)
        mor, mor_half = mean_of_ratios(greedy, base)
        metrics.update({
            "baseline": config.baseline,
            "baseline_total": summarize(base),
            "baseline_per_user": summarize(base / n_users),
            "pr_ratio_of_means": ratio, "pr_ratio_of_means_ci95": half,
            "pr_mean_of_ratios": mor, "pr_mean_of_ratios_ci95": mor_half,
        })
    report = ExperimentReport(metrics, metadata(config.config_hash(), config.seed,
                                                include_timestamp),
                              records if config.keep_records else None, warnings=notes)
    return report


class _RoundSample:
    def __init__(self, config: ExperimentConfig, size: int):
        self.config = config
        self.size = size

    def __call__(self, k: int) -> dict:
        cfg = self.config
        seed = sample_seed(cfg.seed, self.size * 1_000_003 + k)
        g = build_instance(cfg, seed, size_params(cfg, self.size))
        out = run_greedy(cfg, g)
        return {"size": self.size, "index": k, "rounds": out.rounds, "n": g.n}


def size_params(config: ExperimentConfig, size: int) -> dict:
    """Generator parameters for an ``size``-node instance of the config's family."""
    params = dict(config.params)
    if config.family == "grid2d":
        params["side"] = int(round(math.sqrt(size)))
    else:
        params["n"] = int(size)
    if config.family == "gnp" and "d" not in params and "p" not in params:
        raise ConfigError("gnp round measurement needs 'd' (or 'p') in params")
    return params


def log_fit(sizes, mean_rounds) -> dict:
    """Least-squares ``rounds = a + c ln n`` with its coefficient of determination."""
    x = np.log(np.asarray(sizes, dtype=float))
    y = np.asarray(mean_rounds, dtype=float)
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    lin = np.polyfit(np.asarray(sizes, dtype=float), y, 1)
    return {"intercept": float(coef[0]), "c": float(coef[1]), "r2": r2,
            "residual_ss": ss_res, "linear_slope": float(lin[0])}


def measure_rounds(config: ExperimentConfig, *, include_timestamp: bool = False
                   ) -> ExperimentReport:
    """Round counts per size with a logarithmic fit."""
    if config.family not in ("line", "grid2d", "gnp"):
        raise ConfigError("round measurement supports line, grid2d and gnp")
    sizes = config.sizes or [config.params.get("n", 1000)]
    per_size = []
    all_records = []
    for size in sizes:
        recs = map_samples(_RoundSample(config, int(size)), config.samples, config.workers)
        all_records.extend(recs)
        r = np.array([x["rounds"] for x in recs], dtype=float)
        n_nodes = recs[0]["n"]
        per_size.append({"size": int(size), "nodes": int(n_nodes), **summarize(r),
                         "rounds_per_node": float(r.mean() / n_nodes)})
    fit = log_fit([p["nodes"] for p in per_size], [p["mean"] for p in per_size]) \
        if len(per_size) >= 2 else None
    metrics: dict[str, Any] = {"per_size": per_size, "log_fit": fit}
    if config.family == "gnp" and config.weight_model is not None:
        d = config.params.get("d")
        limit = 2.0 / max(config.weight_model.probs)
        metrics["condition"] = {"d": d, "limit": limit,
                                "holds": d is not None and float(d) < limit}
    ratios = [p["rounds_per_node"] for p in per_size]
    metrics["rounds_per_node_decreasing"] = all(b < a for a, b in zip(ratios, ratios[1:]))
    return ExperimentReport(metrics, metadata(config.config_hash(), config.seed,
                                              include_timestamp),
                            all_records if config.keep_records else None)


def run_config(config: ExperimentConfig, **kwargs) -> ExperimentReport:
    """Dispatch a config to the runner its metrics ask for."""
    if "rounds" in config.metrics and config.sizes:
        return measure_rounds(config, **kwargs)
    return estimate_pr(config, **kwargs)
