"""
Tests for the theory.py module
"""
import math
import random
from fractions import Fraction
from itertools import combinations
from unittest import TestCase

import numpy as np
from scipy.stats import binom, poisson

from ..theory import (ModelParams, alpha_from_params, approx_edge_prob_overlap, check_regime, edge_prob_model,
                      edge_prob_overlap, er_kconn_limit, poisson_degree_mean, poisson_pmf, predicted_limit_prob,
                      scaling_diagnostics, scaling_threshold, solve_critical, wilson_interval)


def enumerated_overlap(K, P, d):
    """Fix one ring, enumerate every other ring; symmetric in the first ring."""
    first = set(range(K))
    rings = list(combinations(range(P), K))
    hits = sum(1 for ring in rings if len(first.intersection(ring)) >= d)
    return Fraction(hits, len(rings))


def holds(params, m):
    return float(edge_prob_model(params)) >= scaling_threshold(params.n, m)


class TestModelParams(TestCase):

    def test_k_exceeds_p(self):
        with self.assertRaisesRegex(ValueError, 'K exceeds P'):
            ModelParams(n=10, K=3, P=2, d=1)

    def test_d_out_of_range(self):
        with self.assertRaises(ValueError):
            ModelParams(n=10, K=3, P=10, d=4)

    def test_probability_range(self):
        with self.assertRaises(ValueError):
            ModelParams(n=10, K=3, P=10, d=1, g=1.5)

    def test_p(self):
        self.assertAlmostEqual(ModelParams(n=10, K=3, P=10, d=1, f=0.5, g=0.4).p, 0.2)


class TestEdgeProbOverlap(TestCase):

    def test_single_object(self):
        self.assertEqual(edge_prob_overlap(1, 5, 1), Fraction(1, 5))

    def test_whole_pool(self):
        self.assertEqual(edge_prob_overlap(3, 3, 2), 1)

    def test_known_value(self):
        self.assertEqual(edge_prob_overlap(3, 10, 2), Fraction(11, 60))

    def test_matches_enumeration(self):
        for P in range(1, 13):
            for K in range(1, P + 1):
                for d in range(1, K + 1):
                    self.assertEqual(edge_prob_overlap(K, P, d), enumerated_overlap(K, P, d), (K, P, d))

    def test_complement_identity(self):
        for K, P in ((3, 10), (5, 12), (36, 10000), (6, 11)):
            expected = 1 - Fraction(math.comb(P - K, K), math.comb(P, K))
            self.assertEqual(edge_prob_overlap(K, P, 1), expected)

    def test_monotone(self):
        for K in range(2, 20):
            self.assertLessEqual(edge_prob_overlap(K, 60, 2), edge_prob_overlap(K + 1, 60, 2))
            self.assertGreaterEqual(edge_prob_overlap(K, 60, 2), edge_prob_overlap(K, 61, 2))
            self.assertGreaterEqual(edge_prob_overlap(K, 60, 1), edge_prob_overlap(K, 60, 2))

    def test_invalid(self):
        with self.assertRaises(ValueError):
            edge_prob_overlap(5, 4, 1)
        with self.assertRaises(ValueError):
            edge_prob_overlap(3, 10, 0)


class TestEdgeProbModel(TestCase):

    def test_no_friendships(self):
        self.assertEqual(edge_prob_model(ModelParams(n=10, K=3, P=10, d=2, f=0.0)), 0)

    def test_reduces_to_overlap(self):
        self.assertEqual(edge_prob_model(ModelParams(n=10, K=3, P=10, d=2)), Fraction(11, 60))

    def test_thinned(self):
        self.assertEqual(edge_prob_model(ModelParams(n=10, K=3, P=10, d=2, f=0.5, g=0.5)), Fraction(11, 240))


class TestApproxEdgeProbOverlap(TestCase):

    def test_first_order(self):
        self.assertAlmostEqual(approx_edge_prob_overlap(10, 100000, 1), 0.001)

    def test_second_order(self):
        self.assertAlmostEqual(approx_edge_prob_overlap(10, 90000, 2), 0.5 / 900 ** 2, places=15)

    def test_clamped(self):
        self.assertEqual(approx_edge_prob_overlap(10, 20, 1), 1.0)

    def test_close_to_exact_in_sparse_regime(self):
        exact = float(edge_prob_overlap(10, 100000, 1))
        self.assertLess(abs(approx_edge_prob_overlap(10, 100000, 1) - exact) / exact, 0.01)

    def test_second_order_within_rough_factor(self):
        exact = float(edge_prob_overlap(36, 10000, 2))
        self.assertLess(abs(approx_edge_prob_overlap(36, 10000, 2) - exact) / exact, 0.2)


class TestAlphaFromParams(TestCase):

    def test_no_edges(self):
        alpha = alpha_from_params(ModelParams(n=1000, K=36, P=10000, d=2, f=0.0), 0)
        self.assertAlmostEqual(alpha, -math.log(1000))

    def test_twice_threshold(self):
        n = 1000
        s = float(edge_prob_overlap(60, 10000, 2))
        params = ModelParams(n=n, K=60, P=10000, d=2, f=2 * math.log(n) / n / s)
        self.assertAlmostEqual(alpha_from_params(params, 1), math.log(n) - math.log(math.log(n)), places=9)

    def test_round_trip(self):
        n, K, P, d, g = 1000, 80, 10000, 2, 0.5
        s = float(edge_prob_overlap(K, P, d))
        for m in (0, 1, 3):
            for alpha in (-2.0, 0.0, 0.7):
                f = (scaling_threshold(n, m) + alpha / n) / (g * s)
                params = ModelParams(n=n, K=K, P=P, d=d, f=f, g=g)
                self.assertAlmostEqual(alpha_from_params(params, m), alpha, delta=1e-12)

    def test_small_n(self):
        with self.assertRaises(ValueError):
            alpha_from_params(ModelParams(n=2, K=3, P=10, d=1), 0)

    def test_negative_budget(self):
        with self.assertRaises(ValueError):
            alpha_from_params(ModelParams(n=100, K=3, P=10, d=1), -1)


class TestPredictedLimitProb(TestCase):

    def test_infinite(self):
        self.assertEqual(predicted_limit_prob(math.inf, 3), 1.0)
        self.assertEqual(predicted_limit_prob(-math.inf, 3), 0.0)

    def test_zero(self):
        self.assertAlmostEqual(predicted_limit_prob(0.0, 0), math.exp(-1))
        self.assertAlmostEqual(predicted_limit_prob(0.0, 2), math.exp(-0.5))

    def test_increasing(self):
        values = [predicted_limit_prob(a, 1) for a in (-3.0, -1.0, 0.0, 1.0, 3.0)]
        self.assertEqual(values, sorted(values))
        self.assertTrue(all(0.0 < v < 1.0 for v in values))

    def test_very_negative(self):
        self.assertEqual(predicted_limit_prob(-1000.0, 0), 0.0)

    def test_er_kernel(self):
        rng = random.Random(3)
        for _ in range(100):
            alpha, k = rng.uniform(-5, 5), rng.randint(1, 6)
            self.assertEqual(er_kconn_limit(alpha, k), predicted_limit_prob(alpha, k - 1))
        self.assertAlmostEqual(er_kconn_limit(0.0, 1), math.exp(-1))
        self.assertEqual(er_kconn_limit(-math.inf, 4), 0.0)


class TestCheckRegime(TestCase):

    def test_desk_scale_ring_overlap(self):
        reports = {r.name: r for r in check_regime(ModelParams(n=1000, K=36, P=10000, d=2))}
        self.assertAlmostEqual(reports['ring_overlap'].proxy, 36 * 36 * math.log(1000) / 10000)
        self.assertFalse(reports['ring_overlap'].passed)

    def test_real_network_pool_density(self):
        reports = {r.name: r for r in check_regime(ModelParams(n=60000, K=10, P=90000, d=2))}
        self.assertFalse(reports['pool_density'].passed)

    def test_all_pass(self):
        n = 10 ** 6
        reports = check_regime(ModelParams(n=n, K=int(n ** 0.4), P=n * n, d=2))
        self.assertTrue(all(r.passed for r in reports))

    def test_diagnostics_bundle(self):
        diagnostics = scaling_diagnostics(ModelParams(n=1000, K=36, P=10000, d=2), 0)
        self.assertEqual(diagnostics.s, diagnostics.t)
        self.assertIn('ring_overlap', diagnostics.regime_flags)
        self.assertAlmostEqual(diagnostics.predicted_limit, predicted_limit_prob(diagnostics.alpha, 0))


class TestPoisson(TestCase):

    def test_pmf(self):
        self.assertEqual(poisson_pmf(0, 0), 1.0)
        self.assertEqual(poisson_pmf(0, 3), 0.0)
        self.assertAlmostEqual(poisson_pmf(1, 1), math.exp(-1))

    def test_matches_scipy(self):
        for lam, ell in ((0.5, 0), (3.0, 2), (40.0, 55)):
            self.assertAlmostEqual(poisson_pmf(lam, ell), float(poisson.pmf(ell, lam)), places=15)

    def test_invalid(self):
        with self.assertRaises(ValueError):
            poisson_pmf(-1.0, 2)

    def test_normalized(self):
        self.assertAlmostEqual(sum(poisson_pmf(5, ell) for ell in range(201)), 1.0, delta=1e-12)

    def test_degree_mean(self):
        self.assertEqual(poisson_degree_mean(50, 0.0, 0), 50)
        self.assertEqual(poisson_degree_mean(50, 0.0, 2), 0)
        self.assertAlmostEqual(poisson_degree_mean(1000, math.log(1000) / 1000, 0), 1.0)

    def test_degree_means_sum_to_n(self):
        total = sum(poisson_degree_mean(1000, 0.01, h) for h in range(200))
        self.assertAlmostEqual(total, 1000, delta=1e-6 * 1000)


class TestSolveCritical(TestCase):

    def setUp(self):
        self.params = ModelParams(n=1000, K=36, P=10000, d=2)

    def test_g_on_boundary(self):
        result = solve_critical('g', self.params, 0)
        self.assertTrue(result.feasible)
        self.assertLess(result.value, 1.0)
        self.assertAlmostEqual(alpha_from_params(self.params.replace(g=result.value), 0), 0.0, places=9)

    def test_g_exactly_one(self):
        n = 1000
        s = float(edge_prob_overlap(36, 10000, 2))
        params = self.params.replace(f=math.log(n) / n / s)
        result = solve_critical('g', params, 0)
        self.assertTrue(result.feasible)
        self.assertAlmostEqual(result.value, 1.0, places=12)

    def test_f_closed_form(self):
        params = self.params.replace(g=0.95)
        result = solve_critical('f', params, 0)
        s = float(edge_prob_overlap(36, 10000, 2))
        self.assertAlmostEqual(result.value, math.log(1000) / (1000 * 0.95 * s))

    def test_g_infeasible(self):
        result = solve_critical('g', self.params.replace(f=0.1), 0)
        self.assertFalse(result.feasible)
        self.assertGreater(result.value, 1.0)

    def test_k_matches_scan(self):
        result = solve_critical('K', self.params, 0)
        scanned = next(K for K in range(2, 201) if holds(self.params.replace(K=K), 0))
        self.assertEqual(result.value, scanned)

    def test_p_is_maximal(self):
        result = solve_critical('P', self.params, 0)
        self.assertTrue(result.feasible)
        self.assertTrue(holds(self.params.replace(P=result.value), 0))
        self.assertFalse(holds(self.params.replace(P=result.value + 1), 0))

    def test_n_is_minimal(self):
        result = solve_critical('n', self.params, 0)
        self.assertTrue(result.feasible)
        self.assertTrue(holds(self.params.replace(n=result.value), 0))
        self.assertFalse(holds(self.params.replace(n=result.value - 1), 0))

    def test_m_is_maximal(self):
        params = self.params.replace(K=60)
        result = solve_critical('m', params, 0)
        self.assertTrue(result.feasible)
        self.assertTrue(holds(params, result.value))
        self.assertFalse(holds(params, result.value + 1))

    def test_m_infeasible(self):
        result = solve_critical('m', self.params.replace(f=0.1), 0)
        self.assertFalse(result.feasible)

    def test_unknown_axis(self):
        with self.assertRaises(ValueError):
            solve_critical('x', self.params, 0)


class TestWilsonInterval(TestCase):

    def test_contains_estimate(self):
        for successes in (0, 1, 17, 50):
            low, high = wilson_interval(successes, 50)
            self.assertLessEqual(0.0, low)
            self.assertLessEqual(low, successes / 50)
            self.assertLessEqual(successes / 50, high)
            self.assertLessEqual(high, 1.0)

    def test_extremes(self):
        self.assertEqual(wilson_interval(0, 10)[0], 0.0)
        self.assertEqual(wilson_interval(10, 10)[1], 1.0)

    def test_coverage(self):
        trials = 100
        for p in (0.2, 0.5):
            coverage = 0.0
            for successes in range(trials + 1):
                low, high = wilson_interval(successes, trials)
                if low <= p <= high:
                    coverage += float(binom.pmf(successes, trials, p))
            self.assertGreaterEqual(coverage, 0.93, p)

    def test_coverage_complete_and_empty(self):
        rng = np.random.default_rng(3)
        for p in (0.0, 1.0):
            covered = 0
            for successes in rng.binomial(50, p, size=200):
                low, high = wilson_interval(int(successes), 50)
                covered += low <= p <= high
            self.assertGreaterEqual(covered / 200, 0.93)

    def test_no_trials(self):
        with self.assertRaises(ValueError):
            wilson_interval(0, 0)
