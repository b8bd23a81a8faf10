import csv
import io
import itertools
import json

import numpy as np
import pytest

from greedymatch.errors import ConfigError
from greedymatch.experiments.figures import TARGETS, reproduce
from greedymatch.experiments.harness import (CURVE_COLUMNS, ExperimentConfig, estimate_pr,
                                             load_config, log_fit, measure_rounds, run_config,
                                             sample_seed)
from greedymatch.experiments.sweeps import (is_unimodal, run_caching_case_study,
                                            run_failure_sweep, run_interval_sweep)
from greedymatch.generators import locations_to_csv, synthetic_locations
from greedymatch.graph import WeightedGraph, WeightModel
from greedymatch.greedy import greedy_match
from oracles import brute_force_matching

V12 = WeightModel.uniform([1.0, 2.0])


def quiet(cfg):
    with pytest.warns(RuntimeWarning):
        return estimate_pr(cfg)


class TestConfig:
    def test_incompatible_baseline(self):
        with pytest.raises(ConfigError, match="not defined"):
            ExperimentConfig("grid2d", {"side": 5}, V12, baseline="path_dp")
        with pytest.raises(ConfigError):
            ExperimentConfig("gnp", {"n": 10, "d": 1}, V12, baseline="decomposition")

    def test_pr_vs_exact_needs_exact_baseline(self):
        cfg = ExperimentConfig("line", {"n": 10}, V12, metrics=["pr_vs_exact"],
                               baseline="decomposition")
        with pytest.raises(ConfigError):
            estimate_pr(cfg)

    @pytest.mark.parametrize("kwargs", [
        {"samples": 0}, {"metrics": ["speed"]}, {"baseline": "lp"}, {"tie_rule": "random"},
        {"baseline": "multiunit_bound"}, {"neighbor_max_form": "both"},
    ])
    def test_invalid_fields(self, kwargs):
        with pytest.raises(ConfigError):
            ExperimentConfig("line", {"n": 10}, V12, **kwargs)

    def test_missing_model(self):
        with pytest.raises(ConfigError):
            ExperimentConfig("line", {"n": 10})

    def test_unknown_keys(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            ExperimentConfig.from_dict({"family": "line", "values": [1, 2], "colour": 3})

    def test_json_and_ini_agree(self, tmp_path):
        j = tmp_path / "c.json"
        j.write_text(json.dumps({"family": "line", "params": {"n": 100}, "values": [1, 2],
                                 "samples": 40, "seed": 5}))
        ini = tmp_path / "c.ini"
        ini.write_text("[experiment]\nfamily = line\nvalues = [1, 2]\nsamples = 40\nseed = 5\n"
                       "[params]\nn = 100\n")
        a, b = load_config(j), load_config(ini)
        assert a.config_hash() == b.config_hash()
        assert a.weight_model == V12

    def test_bad_files(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{\n  \"family\": \"line\",\n  oops\n}")
        with pytest.raises(ConfigError, match="line 3"):
            load_config(bad)
        ini = tmp_path / "x.ini"
        ini.write_text("[other]\na = 1\n")
        with pytest.raises(ConfigError, match="experiment"):
            load_config(ini)

    def test_hash_ignores_workers(self):
        a = ExperimentConfig("line", {"n": 10}, V12, workers=1)
        b = ExperimentConfig("line", {"n": 10}, V12, workers=4)
        assert a.config_hash() == b.config_hash()
        assert a.config_hash() != ExperimentConfig("line", {"n": 10}, V12, seed=1).config_hash()


class TestEstimatePr:
    def test_three_edge_path(self):
        # exact expectation over the 8 weight patterns, nodes in decreasing priority
        eps = 1e-6
        g_tot = o_tot = 0.0
        for c in itertools.product([1.0, 1.0 + eps], repeat=3):
            edges = [(3, 2, c[0]), (2, 1, c[1]), (1, 0, c[2])]
            g_tot += greedy_match(WeightedGraph.from_edges(4, edges), tie_rule="id").total_weight
            o_tot += brute_force_matching(4, edges)
        assert g_tot / o_tot == pytest.approx(0.875, abs=1e-5)
        assert g_tot / o_tot >= 0.875
        # and through the harness by sampling
        cfg = ExperimentConfig("line", {"n": 4}, WeightModel.two_level(eps), samples=4000,
                               metrics=["pr_vs_exact"], baseline="exhaustive")
        rep = estimate_pr(cfg)
        assert rep.metrics["pr_ratio_of_means"] == pytest.approx(
            0.875, abs=3 * rep.metrics["pr_ratio_of_means_ci95"])

    def test_small_sample_warning(self):
        cfg = ExperimentConfig("line", {"n": 50}, V12, samples=5)
        rep = quiet(cfg)
        assert rep.warnings

    @pytest.mark.parametrize("baseline", ["path_dp", "tree_dp", "exhaustive"])
    def test_exact_baselines_bound_pr(self, baseline):
        n = 14 if baseline == "exhaustive" else 200
        cfg = ExperimentConfig("line", {"n": n}, WeightModel((1.0, 1.5, 4.0), (0.5, 0.3, 0.2)),
                               samples=40, metrics=["pr_vs_exact"], baseline=baseline,
                               keep_records=True)
        rep = estimate_pr(cfg)
        m = rep.metrics
        assert m["pr_ratio_of_means"] <= 1 + 3 * m["pr_ratio_of_means_ci95"]
        assert all(r["greedy"] <= r["baseline"] + 1e-9 for r in rep.records)
        assert all(r["greedy"] >= 0.5 * r["baseline"] - 1e-9 for r in rep.records)

    def test_both_estimators_reported(self):
        rep = estimate_pr(ExperimentConfig("line", {"n": 500}, V12, samples=30))
        m = rep.metrics
        for key in ("pr_ratio_of_means", "pr_mean_of_ratios", "pr_ratio_of_means_ci95",
                    "pr_mean_of_ratios_ci95"):
            assert np.isfinite(m[key])
        s = m["per_user_weight"]
        assert s["min"] <= s["mean"] <= s["max"]
        assert set(rep.metadata) == {"config_hash", "seed", "code_version"}
        assert "timestamp" in estimate_pr(ExperimentConfig("line", {"n": 50}, V12),
                                          include_timestamp=True).metadata

    def test_reproducible_records(self):
        cfg = ExperimentConfig("gnp", {"n": 300, "d": 2.0}, V12, samples=30, seed=11,
                               baseline="neighbor_max", keep_records=True)
        a, b = estimate_pr(cfg), estimate_pr(cfg)
        assert a.records_hash() == b.records_hash()
        assert a.to_json() == b.to_json()
        other = ExperimentConfig("gnp", {"n": 300, "d": 2.0}, V12, samples=30, seed=12,
                                 baseline="neighbor_max", keep_records=True)
        assert estimate_pr(other).records_hash() != a.records_hash()

    def test_worker_invariance(self):
        base = dict(family="line", params={"n": 2000}, weight_model=V12, samples=30, seed=3,
                    keep_records=True)
        a = estimate_pr(ExperimentConfig(**base, workers=1))
        b = estimate_pr(ExperimentConfig(**base, workers=3))
        assert a.records_hash() == b.records_hash()

    def test_sample_seeds_distinct(self):
        seeds = {sample_seed(7, k) for k in range(10_000)}
        assert len(seeds) == 10_000

    def test_multiunit_baseline(self):
        cfg = ExperimentConfig("line", {"n": 2000}, WeightModel.two_level(1.0), samples=30,
                               baseline="multiunit_bound", quantities=[1, 2])
        pr = estimate_pr(cfg).metrics["pr_ratio_of_means"]
        assert (0.604 + 0.433) / 1.25 - 0.02 <= pr <= 1.0


class TestRounds:
    def test_two_nodes(self):
        cfg = ExperimentConfig("line", {"n": 2}, V12, samples=30, metrics=["rounds"], sizes=[2])
        rep = measure_rounds(cfg)
        assert rep.metrics["per_size"][0]["mean"] == 1.0
        assert rep.metrics["per_size"][0]["max"] == 1.0

    def test_gnp_condition_reported(self):
        cfg = ExperimentConfig("gnp", {"d": 0.5}, V12, samples=30, metrics=["rounds"],
                               sizes=[100, 1000], baseline="neighbor_max")
        rep = run_config(cfg)
        assert rep.metrics["condition"] == {"d": 0.5, "limit": 4.0, "holds": True}

    def test_unsupported_family(self):
        cfg = ExperimentConfig("geometric", {"n": 10, "R": 10, "L": 3}, V12, metrics=["rounds"],
                               sizes=[10], baseline="neighbor_max")
        with pytest.raises(ConfigError):
            measure_rounds(cfg)

    def test_grid_sizes_are_node_counts(self):
        cfg = ExperimentConfig("grid2d", {}, V12, samples=30, metrics=["rounds"],
                               sizes=[100, 400], baseline="neighbor_max")
        assert [p["nodes"] for p in measure_rounds(cfg).metrics["per_size"]] == [100, 400]

    def test_log_fit_exact(self):
        sizes = [10, 100, 1000, 10_000]
        fit = log_fit(sizes, [1 + 2 * np.log(s) for s in sizes])
        assert fit["c"] == pytest.approx(2.0)
        assert fit["intercept"] == pytest.approx(1.0)
        assert fit["r2"] == pytest.approx(1.0)


class TestCaching:
    def test_synthetic_study(self):
        rep = run_caching_case_study(None, [0, 2, 4, 6, 8, 10], seed=1)
        rows = rep.metrics["rows"]
        assert rows[0]["caching_per_user"] == 0.0
        assert rows[0]["mean_degree"] == 0.0
        degs = [r["mean_degree"] for r in rows]
        assert all(b >= a for a, b in zip(degs, degs[1:]))
        assert rep.metrics["nondecreasing_in_L"]
        for r in rows[1:]:
            assert "gap_caching_vs_gnp" in r and np.isfinite(r["gnp_per_user"])
        assert rep.metadata["locations"] == "synthetic"

    def test_location_file(self, tmp_path):
        path = tmp_path / "loc.csv"
        path.write_text(locations_to_csv(synthetic_locations(150, seed=4)))
        rep = run_caching_case_study(path, [0, 3, 6], seed=2)
        assert rep.metadata["locations"] == "file"
        assert rep.metrics["rows"][0]["caching_per_user"] == 0.0


class TestSweeps:
    def test_failure_sweep_shape(self):
        rep = run_failure_sweep(2000, 400.0, [20, 40, 80], 0.02, 0.1, seed=0, samples=2)
        m = rep.metrics
        assert m["no_failure_nondecreasing"] and m["failures_below"]
        assert {c["series"] for c in rep.curves} == {"no_failure", "type1", "type2"}

    def test_interval_sweep(self):
        rep = run_interval_sweep(20, [0.1], [0.5], [1, 3, 6, 12], seed=0, horizon=300)
        rows = rep.metrics["rows"]
        for r in rows:
            assert r["participants"] == pytest.approx(r["participants_closed_form"], rel=0.1)

    def test_unimodal_helper(self):
        assert is_unimodal([1, 2, 3, 3, 2, 1])
        assert is_unimodal([3, 2, 1])
        assert not is_unimodal([1, 3, 2, 4])


@pytest.mark.parametrize("target", TARGETS)
def test_quick_reproduce(target):
    rep = reproduce(target, seed=0, quick=True)
    text = rep.curves_csv()
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == CURVE_COLUMNS
    assert len(rows) > 1
    assert all(len(r) == len(CURVE_COLUMNS) for r in rows)
    assert reproduce(target, seed=0, quick=True).to_json() == rep.to_json()


def test_unknown_target():
    with pytest.raises(ConfigError):
        reproduce("fig3", quick=True)
