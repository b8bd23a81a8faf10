"""Pre-baked figure configurations for ``greedymatch reproduce``.

Each target returns an :class:`ExperimentReport` whose ``curves`` hold the
figure data. ``quick=True`` shrinks sizes for smoke runs; the shape of the
output is the same.
"""

from __future__ import annotations

import warnings

import numpy as np

from ..analytics.linear import pr_lower_bound_multiunit
from ..analytics.trees import expected_root_weight, pr_curve_gnp
from ..errors import ConfigError
from ..graph import WeightModel
from .harness import ExperimentConfig, ExperimentReport, estimate_pr, metadata
from .sweeps import run_caching_case_study, run_failure_sweep, run_interval_sweep

TARGETS = ("fig7", "fig8", "fig9", "fig10", "fig11")

FIGURE_CONFIGS = {
    "fig7": {"L_grid": [0, 1, 2, 3, 4, 6, 8, 10], "snapshots": 3, "n_users": 300},
    "fig8": {"d_grid": [0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1, 1.5, 2, 2.5, 3, 4, 5, 7, 10],
             "n": 10_000, "samples": 20, "values": [1.0, 2.0]},
    "fig9": {"n": 10_000, "R": 1000.0, "L_grid": [10, 20, 30, 40, 50, 60, 70, 80, 90, 100],
             "delta1": 0.02, "delta2": 0.1, "samples": 3},
    "fig10": {"lam": 20, "mu_set": [0.05, 0.1, 0.2], "gamma_set": [0.2, 0.5, 0.8],
              "T_grid": [1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 25, 30], "horizon": 1500},
    "fig11": {"deltas": [0.01, 0.1, 0.5, 1, 2, 5, 10], "n": 100_000, "samples": 5},
}

QUICK_OVERRIDES = {
    "fig7": {"L_grid": [0, 2, 5], "snapshots": 1, "n_users": 120},
    "fig8": {"d_grid": [0.5, 2], "n": 1000, "samples": 3},
    "fig9": {"n": 1000, "L_grid": [50, 100, 200], "samples": 1},
    "fig10": {"mu_set": [0.1], "gamma_set": [0.5], "T_grid": [1, 5, 20], "horizon": 200},
    "fig11": {"deltas": [0.1, 1], "n": 2000, "samples": 2},
}


def figure_config(target: str, quick: bool = False) -> dict:
    if target not in TARGETS:
        raise ConfigError(f"unknown figure {target!r}; expected one of {TARGETS}")
    cfg = dict(FIGURE_CONFIGS[target])
    if quick:
        cfg.update(QUICK_OVERRIDES[target])
    return cfg


def _fig8(cfg: dict, seed: int, include_timestamp: bool) -> ExperimentReport:
    model = WeightModel.uniform(cfg["values"])
    points = pr_curve_gnp(cfg["d_grid"], cfg["n"], model, cfg["samples"], seed)
    curves = []
    for p in points:
        curves.append({"series": "pr", "parameter": p.d, "analytic_value": p.pr_analytic,
                       "simulated_value": p.pr_simulated, "ci_halfwidth": p.pr_ci})
    for p in points:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            tree = expected_root_weight(p.d, model)
        curves.append({"series": "per_user_weight", "parameter": p.d, "analytic_value": tree,
                       "simulated_value": p.simulated_weight,
                       "ci_halfwidth": 1.96 * p.simulated_se})
    sims = [p.pr_simulated for p in points]
    metrics = {"min_pr": float(min(sims)), "argmin_d": points[int(np.argmin(sims))].d,
               "points": [p.__dict__ for p in points]}
    return ExperimentReport(metrics, metadata("fig8", seed, include_timestamp), curves=curves)


def _fig11(cfg: dict, seed: int, include_timestamp: bool) -> ExperimentReport:
    curves = []
    rows = []
    for k, delta in enumerate(cfg["deltas"]):
        config = ExperimentConfig("line", {"n": cfg["n"]}, WeightModel.two_level(delta),
                                  samples=cfg["samples"], seed=seed + k,
                                  baseline="multiunit_bound", quantities=[1, 2])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            rep = estimate_pr(config)
        bound = pr_lower_bound_multiunit(delta)
        rows.append({"delta": delta, "pr": rep.metrics["pr_ratio_of_means"], "bound": bound})
        curves.append({"series": "multiunit_pr", "parameter": delta, "analytic_value": bound,
                       "simulated_value": rep.metrics["pr_ratio_of_means"],
                       "ci_halfwidth": rep.metrics["pr_ratio_of_means_ci95"]})
    return ExperimentReport({"rows": rows}, metadata("fig11", seed, include_timestamp),
                            curves=curves)


def reproduce(target: str, seed: int = 0, *, quick: bool = False, location_file=None,
              include_timestamp: bool = False) -> ExperimentReport:
    cfg = figure_config(target, quick)
    if target == "fig7":
        return run_caching_case_study(location_file, cfg["L_grid"], seed,
                                      snapshots=cfg["snapshots"], n_users=cfg["n_users"],
                                      include_timestamp=include_timestamp)
    if target == "fig8":
        return _fig8(cfg, seed, include_timestamp)
    if target == "fig9":
        return run_failure_sweep(cfg["n"], cfg["R"], cfg["L_grid"], cfg["delta1"],
                                 cfg["delta2"], seed, samples=cfg["samples"],
                                 include_timestamp=include_timestamp)
    if target == "fig10":
        return run_interval_sweep(cfg["lam"], cfg["mu_set"], cfg["gamma_set"], cfg["T_grid"],
                                  seed, horizon=cfg["horizon"],
                                  include_timestamp=include_timestamp)
    return _fig11(cfg, seed, include_timestamp)
