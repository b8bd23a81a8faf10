"""Parameter sweeps for the practical scenarios: caching, link failures, market interval."""

from __future__ import annotations

import math
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np

from ..analytics.steady_state import steady_state_participants
from ..analytics.trees import expected_root_weight
from ..generators import (LocationRecord, generate_geometric, generate_gnp,
                          ingest_caching_instance, read_locations, synthetic_locations)
from ..graph import WeightModel
from ..greedy import greedy_match
from ..stats import mean_ci
from ..wireless import greedy_with_failures, run_dynamic
from .harness import ExperimentReport, derive_seed, metadata, sample_seed


def _hash(*parts) -> str:
    return f"{derive_seed(*parts):016x}"


def run_caching_case_study(location_file: str | Path | None, L_grid: Sequence[float], seed: int,
                           *, snapshots: int = 3, n_users: int = 300, library: int = 10,
                           cache: int = 3, gnp_samples: int = 20, include_timestamp: bool = False
                           ) -> ExperimentReport:
    """Greedy on the caching graph against ``G(n, d/n)`` at the same mean degree.

    With no location file, ``snapshots`` synthetic building snapshots of
    ``n_users`` users are generated. For each ``L`` the report gives the
    mean degree, the caching-graph per-user weight, the matched ``G(n, d/n)``
    per-user weight (weights drawn from the empirical caching distribution)
    and the tree-model value.
    """
    if location_file is not None:
        sets = [read_locations(location_file)]
    else:
        sets = [synthetic_locations(n_users, seed=derive_seed("locations", seed, s))
                for s in range(snapshots)]
    curves = []
    rows = []
    for L in L_grid:
        L = float(L)
        deg, weight, weights_seen, n_tot = [], [], [], 0
        for s, records in enumerate(sets):
            # same caches for every L so the graphs are nested in L
            g = ingest_caching_instance(records, library, cache, L, sample_seed(seed, s))
            n_tot += g.n
            deg.append(float(g.degree.mean()) if g.n else 0.0)
            weight.append(greedy_match(g).total_weight / max(g.n, 1))
            weights_seen.extend(g.w.tolist())
        d = float(np.mean(deg))
        per_user, _, half = mean_ci(weight)
        row = {"L": L, "mean_degree": d, "caching_per_user": per_user, "caching_ci95": half}
        if weights_seen and d > 0:
            model = WeightModel.empirical(weights_seen)
            n = max(2, n_tot // len(sets))
            vals = [greedy_match(generate_gnp(n, min(1.0, d / (n - 1)), model,
                                              sample_seed(seed, 10_000 + k))).total_weight / n
                    for k in range(gnp_samples)]
            gm, _, ghalf = mean_ci(vals)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                tree = expected_root_weight(d, model)
            row.update({"gnp_per_user": gm, "gnp_ci95": ghalf, "tree_per_user": tree,
                        "gap_caching_vs_gnp": per_user - gm})
        else:
            row.update({"gnp_per_user": 0.0, "gnp_ci95": 0.0, "tree_per_user": 0.0,
                        "gap_caching_vs_gnp": per_user})
        rows.append(row)
        curves.append({"series": "caching", "parameter": L, "analytic_value": None,
                       "simulated_value": per_user, "ci_halfwidth": half})
        curves.append({"series": "gnp_matched_d", "parameter": L,
                       "analytic_value": row["tree_per_user"],
                       "simulated_value": row["gnp_per_user"], "ci_halfwidth": row["gnp_ci95"]})
    per_user = [r["caching_per_user"] for r in rows]
    metrics = {"rows": rows,
               "nondecreasing_in_L": all(b >= a - 1e-12 for a, b in zip(per_user, per_user[1:]))}
    meta = metadata(_hash("caching", str(location_file), list(L_grid), snapshots, n_users),
                    seed, include_timestamp)
    meta["locations"] = "file" if location_file is not None else "synthetic"
    return ExperimentReport(metrics, meta, curves=curves)


def run_failure_sweep(n: int, R: float, L_grid: Sequence[float], delta1: float, delta2: float,
                      seed: int, *, samples: int = 3, weight_model: WeightModel | None = None,
                      interference_radius: float | None = None, include_timestamp: bool = False
                      ) -> ExperimentReport:
    """Per-user greedy weight versus ``L`` without failures, with type-I only, with type-II only."""
    model = weight_model or WeightModel.uniform([1.0, 2.0])
    rows, curves = [], []
    for L in L_grid:
        L = float(L)
        a, b, c = [], [], []
        for k in range(samples):
            s = sample_seed(seed, k * 100_000 + int(L * 100))
            g = generate_geometric(n, R, L, model, s)
            out = greedy_match(g)
            radius = L if interference_radius is None else interference_radius
            a.append(out.total_weight / n)
            b.append(greedy_with_failures(g, delta1, 0.0, radius, s + 1, outcome=out)
                     .total_weight / n)
            c.append(greedy_with_failures(g, 0.0, delta2, radius, s + 2, outcome=out)
                     .total_weight / n)
        row = {"L": L}
        for name, vals in (("no_failure", a), ("type1", b), ("type2", c)):
            mean, _, half = mean_ci(vals)
            row[name] = mean
            row[name + "_ci95"] = half
            curves.append({"series": name, "parameter": L, "analytic_value": None,
                           "simulated_value": mean, "ci_halfwidth": half})
        rows.append(row)
    gap1 = [r["no_failure"] - r["type1"] for r in rows]
    gap2 = [r["no_failure"] - r["type2"] for r in rows]
    base = [r["no_failure"] for r in rows]
    metrics = {
        "rows": rows,
        "no_failure_nondecreasing": all(y >= x - 1e-12 for x, y in zip(base, base[1:])),
        "failures_below": all(r["type1"] <= r["no_failure"] and r["type2"] <= r["no_failure"]
                              for r in rows),
        "gap_type1_increasing": all(y > x for x, y in zip(gap1, gap1[1:])),
        "gap_type2_increasing": all(y > x for x, y in zip(gap2, gap2[1:])),
    }
    meta = metadata(_hash("failure", n, R, list(L_grid), delta1, delta2, samples), seed,
                    include_timestamp)
    return ExperimentReport(metrics, meta, curves=curves)


def is_unimodal(y: Sequence[float]) -> bool:
    """Non-decreasing up to the maximum, non-increasing after it."""
    y = list(y)
    k = int(np.argmax(y))
    return all(b >= a for a, b in zip(y[:k + 1], y[1:k + 1])) and \
        all(b <= a for a, b in zip(y[k:], y[k + 1:]))


def run_interval_sweep(lam: float, mu_set: Sequence[float], gamma_set: Sequence[float],
                       T_grid: Sequence[int], seed: int, *, horizon: int = 2000,
                       range_l: float = 100.0, radius_r: float = 1000.0,
                       include_timestamp: bool = False) -> ExperimentReport:
    """Time-average weight per minute versus the market interval ``T`` per ``(gamma, mu)``."""
    rows, curves = [], []
    summary = []
    for gamma in gamma_set:
        for mu in mu_set:
            series = f"gamma={gamma:g},mu={mu:g}"
            ys = []
            for T in T_grid:
                res = run_dynamic(lam, mu, gamma, int(T), range_l, radius_r, horizon,
                                  sample_seed(seed, derive_seed(gamma, mu, T) % 2**31))
                y = res.weight_per_minute
                ys.append(y)
                m_closed = steady_state_participants(lam, mu, gamma, int(T))
                rows.append({"gamma": gamma, "mu": mu, "T": int(T), "weight_per_minute": y,
                             "participants": res.steady_participants,
                             "participants_closed_form": m_closed})
                curves.append({"series": series, "parameter": int(T), "analytic_value": None,
                               "simulated_value": y, "ci_halfwidth": None})
            best = int(T_grid[int(np.argmax(ys))])
            summary.append({"gamma": gamma, "mu": mu, "best_T": best, "unimodal": is_unimodal(ys)})
    optimal_T_decreasing_in_mu = True
    for gamma in gamma_set:
        bests = [s["best_T"] for s in summary if s["gamma"] == gamma]
        mus = [s["mu"] for s in summary if s["gamma"] == gamma]
        order = np.argsort(mus)
        bests = [bests[i] for i in order]
        optimal_T_decreasing_in_mu &= all(b <= a for a, b in zip(bests, bests[1:]))
    metrics = {"rows": rows, "summary": summary,
               "optimal_T_nonincreasing_in_mu": bool(optimal_T_decreasing_in_mu)}
    meta = metadata(_hash("interval", lam, list(mu_set), list(gamma_set), list(T_grid), horizon),
                    seed, include_timestamp)
    return ExperimentReport(metrics, meta, curves=curves)
