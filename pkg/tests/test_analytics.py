import math

import numpy as np
import pytest

from greedymatch.analytics.grid import (P_M_STATED, comb_recurrence, grid_bound_per_node,
                                        grid_constants, grid_recurrence, pr_lower_bound_grid,
                                        right_left_proposals_printed, step3_tail_bound,
                                        step3_term, vertical_match_probability)
from greedymatch.analytics.linear import (RecurrenceSpec, line_sequence, linear_recurrence,
                                          multiunit_segment_term, pr_lower_bound_linear,
                                          pr_lower_bound_linear_ratio, pr_lower_bound_multiunit,
                                          two_level_recurrence, uniform_beta_gamma,
                                          uniform_limit)
from greedymatch.analytics.steady_state import steady_state_participants
from greedymatch.analytics.trees import (closed_form_rhs, expected_root_weight,
                                         root_match_probabilities, series_rhs,
                                         simulate_proposal_probabilities,
                                         solve_tree_fixed_point)
from greedymatch.bounds import decomposition_bound_expected
from greedymatch.errors import (InvalidParameterError, NoSteadyStateError,
                                UnsupportedCaseError)
from greedymatch.generators import generate_line
from greedymatch.graph import WeightedGraph, WeightModel
from greedymatch.greedy import greedy_match
from oracles import line_slope_by_prefixes

V12 = WeightModel.uniform([1.0, 2.0])
EPS = 1e-6


class TestLineRecurrence:
    def test_two_level_example(self):
        spec = linear_recurrence(WeightModel((1.0, 2.0), (0.5, 0.5)))
        assert spec.beta == pytest.approx([0.25, 0.75])
        assert spec.gamma == pytest.approx([0.75, 0.25])
        assert spec.constant_term == pytest.approx(1.75)
        assert spec.slope == pytest.approx(7 / 9, abs=1e-15)

    @pytest.mark.parametrize("p1", [0.5, 0.2, 0.7, 0.93])
    def test_two_level_forms_agree(self, p1):
        # the K=2 closed form and the uniform coefficients coincide at p1 = 1/2
        a = two_level_recurrence(1.0, 3.0, p1)
        if p1 == 0.5:
            b = linear_recurrence(WeightModel.uniform([1.0, 3.0]))
            assert a.constant_term == pytest.approx(b.constant_term)
            assert dict(a.lag_coefficients) == pytest.approx(dict(b.lag_coefficients))
        assert math.fsum(c for _, c in a.lag_coefficients) == pytest.approx(1.0)

    @pytest.mark.parametrize("values,probs", [
        ((1.0, 2.0), (0.5, 0.5)),
        ((1.0, 2.0), (0.3, 0.7)),
        ((1.0, 1.3), (0.8, 0.2)),
        ((1.0, 2.0, 3.0), (1 / 3, 1 / 3, 1 / 3)),
        ((1.0, 1.5, 2.5, 4.0), (0.25, 0.25, 0.25, 0.25)),
        ((0.5, 1.0, 2.0, 3.0, 9.0), (0.2,) * 5),
    ])
    def test_slope_matches_prefix_enumeration(self, values, probs):
        m = WeightModel(values, probs)
        assert linear_recurrence(m).slope == pytest.approx(
            line_slope_by_prefixes(values, probs), rel=1e-12)

    def test_uniform_coefficients_sum_to_one(self):
        for K in range(1, 9):
            beta, gamma = uniform_beta_gamma(K)
            assert math.fsum(gamma) == pytest.approx(1.0)
            # beta weights the constant term; for equal weights it sums to E[reward]
            assert all(b > 0 for b in beta)

    def test_unsupported(self):
        with pytest.raises(UnsupportedCaseError):
            linear_recurrence(WeightModel((1, 2, 3), (0.2, 0.3, 0.5)))
        with pytest.raises(UnsupportedCaseError):
            pr_lower_bound_linear(WeightModel((1, 2, 3), (0.2, 0.3, 0.5)))

    def test_iteration_converges(self):
        m = V12
        a = line_sequence(m, 10_000)
        assert a[1] == 0 and a[2] == pytest.approx(1.5)
        assert a[-1] / 10_000 == pytest.approx(7 / 9, abs=1e-3)

    def test_small_lines_exact(self):
        # a_t against greedy averaged over every weight assignment
        import itertools
        m = V12
        seq = line_sequence(m, 7)
        for t in range(2, 8):
            tot = 0.0
            for combo in itertools.product(m.values, repeat=t - 1):
                tot += greedy_match(WeightedGraph.path(combo), tie_rule="left").total_weight
            assert seq[t] == pytest.approx(tot / 2 ** (t - 1))

    def test_spec_validation(self):
        with pytest.raises(InvalidParameterError):
            RecurrenceSpec(1.0, [(1, 0.5), (2, 0.4)])
        with pytest.raises(InvalidParameterError):
            RecurrenceSpec(1.0, [(0, 1.0)])

    @pytest.mark.parametrize("model", [
        WeightModel.uniform([1.0, 2.0]),
        WeightModel((1.0, 2.0), (0.3, 0.7)),
        WeightModel.uniform([1.0, 2.0, 3.0]),
        WeightModel.uniform([1.0, 1.5, 2.0, 4.0]),
    ])
    @pytest.mark.parametrize("rule", ["left", "id"])
    def test_slope_matches_simulation(self, model, rule):
        n = 100_000
        sims = [greedy_match(generate_line(n, model, s), tie_rule=rule).total_weight / n
                for s in range(5)]
        assert np.mean(sims) == pytest.approx(linear_recurrence(model).slope, rel=5e-3)

    def test_prefix_oracle_beyond_closed_forms(self):
        # non-uniform K=3 has no closed form; the enumeration still predicts simulation
        m = WeightModel((1.0, 2.0, 4.0), (0.5, 0.3, 0.2))
        n = 100_000
        sims = [greedy_match(generate_line(n, m, s)).total_weight / n for s in range(5)]
        assert np.mean(sims) == pytest.approx(line_slope_by_prefixes(m.values, m.probs),
                                              rel=5e-3)


class TestLineBounds:
    def test_eight_ninths(self):
        assert pr_lower_bound_linear(WeightModel.uniform([1, 1 + EPS])) == pytest.approx(
            8 / 9, abs=1e-6)

    def test_fourteen_fifteenths(self):
        m = V12
        assert pr_lower_bound_linear(m) == pytest.approx(14 / 15, abs=1e-14)
        assert pr_lower_bound_linear_ratio(m) == pytest.approx(14 / 15, abs=1e-14)
        assert linear_recurrence(m).slope / (decomposition_bound_expected(6, m) / 6) == \
            pytest.approx(14 / 15)

    @pytest.mark.parametrize("K", [2, 3, 4, 6, 10])
    def test_uniform_limit(self, K):
        m = WeightModel.evenly_spaced(K, 1e-9)
        assert pr_lower_bound_linear(m) == pytest.approx(uniform_limit(K), abs=1e-8)

    def test_limit_tends_to_e_minus_two(self):
        assert uniform_limit(2000) == pytest.approx(1 - math.exp(-2), abs=1e-3)
        vals = [uniform_limit(K) for K in range(2, 50)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("model", [
        WeightModel((1.0, 2.0), (0.3, 0.7)),
        WeightModel((1.0, 5.0), (0.9, 0.1)),
        WeightModel.uniform([1.0, 2.0, 3.0]),
        WeightModel.uniform([1.0, 1.1, 1.7, 3.0]),
    ])
    def test_closed_form_equals_slope_ratio(self, model):
        assert pr_lower_bound_linear(model) == pytest.approx(pr_lower_bound_linear_ratio(model),
                                                             rel=1e-12)


class TestGrid:
    def test_recurrence_constants(self):
        for delta in (0.0, 0.5, 2.0):
            spec = grid_recurrence(delta=delta)
            assert spec.constant_term == pytest.approx((19 + 15 * delta) / 16)
            assert dict(spec.lag_coefficients) == pytest.approx({1: 0.25, 2: 0.625, 3: 0.125})
            assert spec.slope == pytest.approx((19 + 15 * delta) / 30)

    def test_recurrence_from_model(self):
        assert grid_recurrence(WeightModel.two_level(1.0)).slope == pytest.approx(34 / 30)
        with pytest.raises(UnsupportedCaseError):
            grid_recurrence(WeightModel.uniform([1, 2, 3]))
        with pytest.raises(InvalidParameterError):
            grid_recurrence(delta=-1)

    def test_rounded_bound(self):
        assert pr_lower_bound_grid(0.0) == pytest.approx(0.9213)
        assert pr_lower_bound_grid(1e9) == pytest.approx(0.6967 / 0.9375, abs=1e-6)
        vals = [pr_lower_bound_grid(d) for d in np.linspace(0, 20, 50)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_exact_bound_matches_rounded(self):
        for delta in (0.0, 0.3, 1.0, 5.0):
            assert pr_lower_bound_grid(delta, exact=True) == pytest.approx(
                pr_lower_bound_grid(delta), abs=5e-4)

    def test_step3(self):
        assert step3_term(0.0) == pytest.approx(0.288, abs=5e-4)
        # linear in delta with slope about 0.1967
        assert step3_term(1.0) - step3_term(0.0) == pytest.approx(0.1967, abs=5e-4)
        assert step3_tail_bound(0.0) < 1e-6
        # tail bound really bounds the dropped terms
        assert step3_term(0.0, t_max=400) - step3_term(0.0) <= step3_tail_bound(0.0)

    def test_printed_recursion(self):
        y_r, y_l = right_left_proposals_printed(2)
        assert y_r == pytest.approx([0.25, 1.0])
        assert y_l == pytest.approx([0.1875, 0.5])

    def test_vertical_match_candidates(self):
        # combining the stated proposal values gives the stated p_M
        stated = vertical_match_probability([0.25, 1.0], [4 / 15, 2 / 3], [0.5, 0.5])
        assert stated == pytest.approx(P_M_STATED)
        y_r, y_l = right_left_proposals_printed(2)
        assert vertical_match_probability(y_r, y_l, [0.5, 0.5]) == pytest.approx(159 / 512)

    def test_comb_slope_by_simulation(self):
        from greedymatch.experiments.probe import comb_graph
        n = 100_000
        vals = [greedy_match(comb_graph(n, V12, s), tie_rule="left").total_weight / n
                for s in range(4)]
        assert np.mean(vals) == pytest.approx(comb_recurrence(1.0, 2.0, 0.5).slope, rel=5e-3)

    def test_constants_bundle(self):
        c = grid_constants(0.0)
        assert c.slope == pytest.approx(19 / 30)
        assert c.pr_bound == pytest.approx((c.slope + c.step3) / (2 * grid_bound_per_node(0.0)))


class TestMultiunitCurve:
    def test_limits(self):
        assert pr_lower_bound_multiunit(1e-9) == pytest.approx(0.604 / 0.75)
        assert pr_lower_bound_multiunit(0.0) > 0.805
        assert pr_lower_bound_multiunit(1e9) == pytest.approx(0.866, abs=1e-6)
        vals = [pr_lower_bound_multiunit(d) for d in np.linspace(0, 30, 60)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_segment_term(self):
        for delta in (0.0, 1.0, 4.0):
            assert multiunit_segment_term(delta) == pytest.approx(0.16 + 0.1 * delta, abs=1e-9)

    def test_exact_close_to_rounded(self):
        for delta in (0.0, 0.01, 1.0, 10.0):
            assert pr_lower_bound_multiunit(delta, exact=True) == pytest.approx(
                pr_lower_bound_multiunit(delta), abs=2e-3)

    def test_negative_delta(self):
        with pytest.raises(InvalidParameterError):
            pr_lower_bound_multiunit(-0.5)


class TestTreeFixedPoint:
    def test_zero_degree(self):
        assert solve_tree_fixed_point(0.0, V12).y == [1.0, 1.0]

    def test_small_degree(self):
        assert all(y > 1 - 1e-5 for y in solve_tree_fixed_point(1e-6, V12).y)

    def test_top_level_rhs_at_one(self):
        for d in (0.3, 1.0, 4.0):
            pK = V12.probs[-1]
            assert series_rhs(1.0, 1, 0.0, d, V12) == pytest.approx(
                (1 - math.exp(-pK * d)) / (pK * d), rel=1e-12)

    def test_series_equals_closed_form(self):
        rng = np.random.default_rng(0)
        m = WeightModel((1.0, 2.0, 3.0), (0.2, 0.5, 0.3))
        for _ in range(200):
            y, d, h = rng.uniform(1e-6, 1), rng.uniform(0.01, 12), rng.uniform(0, 1)
            k = int(rng.integers(3))
            assert series_rhs(y, k, h, d, m) == pytest.approx(closed_form_rhs(y, k, h, d, m),
                                                              rel=1e-10)

    @pytest.mark.parametrize("d", [0.2, 0.5, 0.9, 2.0, 10.0])
    @pytest.mark.parametrize("model", [V12, WeightModel((1.0, 2.0, 5.0), (0.5, 0.3, 0.2))])
    def test_residual_and_uniqueness(self, d, model):
        sol = solve_tree_fixed_point(d, model)
        assert max(sol.residuals) < 1e-10
        higher = 0.0
        for k in range(model.K - 1, -1, -1):
            grid = np.linspace(1e-6, 1.0, 1000)
            f = np.array([t - series_rhs(t, k, higher, d, model) for t in grid])
            assert np.count_nonzero(np.diff(np.sign(f)) != 0) == 1
            assert 0 < sol.y[k] <= 1
            higher += model.probs[k] * sol.y[k]

    def test_proposals_by_simulation(self):
        for d in (0.2, 0.5):
            sol = solve_tree_fixed_point(d, V12)
            emp, _ = simulate_proposal_probabilities(d, V12, 1_000_000, seed=3)
            assert np.max(np.abs(np.asarray(emp) - sol.y)) < 1e-3

    def test_root_probabilities(self):
        sol = solve_tree_fixed_point(0.5, V12)
        probs = root_match_probabilities(sol)
        # matched at all = some child proposes
        rate = sum(sol.d * p * y for p, y in zip(V12.probs, sol.y))
        assert sum(probs) == pytest.approx(1 - math.exp(-rate))

    def test_root_weight_limits(self):
        assert expected_root_weight(0.0, V12) == 0.0
        assert expected_root_weight(1e-4, V12) < 1e-3
        with pytest.warns(RuntimeWarning):
            expected_root_weight(2.0, V12)
        with pytest.raises(InvalidParameterError):
            expected_root_weight(0.5, V12, mode="exact")

    @pytest.mark.parametrize("d", [0.2, 0.5, 0.9])
    def test_analytic_vs_monte_carlo(self, d):
        a = expected_root_weight(d, V12)
        mc = expected_root_weight(d, V12, mode="monte_carlo", samples=400_000, seed=int(d * 10))
        assert abs(a - mc.mean) < 3 * mc.stderr + 1e-4
        assert not mc.truncated


class TestSteadyState:
    def test_single_term(self):
        assert steady_state_participants(20, 0.1, 0.0, 1) == pytest.approx(20 * math.exp(-0.1))

    def test_no_departures(self):
        assert steady_state_participants(20, 1e-12, 0.0, 7) == pytest.approx(140)

    def test_fixed_point(self):
        lam, mu, g, T = 20, 0.1, 0.5, 5
        M = steady_state_participants(lam, mu, g, T)
        rhs = M * g * math.exp(-mu * T) + sum(lam * math.exp(-mu * (T - t)) for t in range(T))
        assert M == pytest.approx(rhs)

    def test_no_steady_state(self):
        with pytest.raises(NoSteadyStateError):
            steady_state_participants(20, 0.0, 1.0, 5)
        with pytest.raises(InvalidParameterError):
            steady_state_participants(20, 0.1, 0.5, 0)
