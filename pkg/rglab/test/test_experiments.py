"""
Tests for the experiments.py module
"""
import io
import logging
import math
import os
import unittest
from unittest import TestCase

import numpy as np
from mockito import times, unstub, verify, when

from .fake_data import K4, STAR_5
from ..connectivity import is_connected
from ..experiments import (ExperimentConfig, SerialPool, TrialRunner, coupling_validity_oracle,
                           coupling_validity_rate, degree_law_test, dominance_test, gap_event, gap_test,
                           poisson_chi_square, poissonization_test, run_min_degree_trials, run_resilience_trials,
                           sweep_experiment, total_variation)
from ..generators import InfeasibleCouplingError, gen_model_graph, trial_stream
from ..output import write_results_csv
from ..theory import ModelParams, edge_prob_overlap, predicted_limit_prob, solve_critical

SLOW_TESTS = os.getenv('RG_LAB_SLOW_TESTS') is not None

DESK_SCALE = ModelParams(n=1000, K=36, P=10000, d=2)


def complete_setting(n=12):
    return ModelParams(n=n, K=4, P=4, d=1)


def serial_runner():
    return TrialRunner(workers=1)


class TestExperimentConfig(TestCase):

    def test_trials_positive(self):
        with self.assertRaises(ValueError):
            ExperimentConfig(params=complete_setting(), trials=0)

    def test_unknown_event(self):
        with self.assertRaises(ValueError):
            ExperimentConfig(params=complete_setting(), event='diameter')

    def test_sweep_value_outside_domain(self):
        with self.assertRaisesRegex(ValueError, 'sweep value g=1.5 invalid'):
            ExperimentConfig(params=complete_setting(), sweep=('g', (0.5, 1.5)))

    def test_points(self):
        cfg = ExperimentConfig(params=complete_setting(), sweep=('m', (0, 2)))
        self.assertEqual([(axis, value, m) for axis, value, _, m in cfg.points()], [('m', 0, 0), ('m', 2, 2)])


class TestTrialRunner(TestCase):

    def setUp(self):
        logging.getLogger().setLevel(level=logging.INFO)
        self.runner = serial_runner()

    def tearDown(self):
        unstub()

    def test_ordered_outcomes(self):
        self.assertEqual(self.runner.run(abs, 5), [0, 1, 2, 3, 4])

    def test_pool_used_once_per_point(self):
        when(self.runner).pool().thenReturn(SerialPool())
        cfg = ExperimentConfig(params=complete_setting(), trials=3, sweep=('g', (0.0, 1.0)))
        sweep_experiment(cfg, self.runner)
        verify(self.runner, times(2)).pool()

    def test_progress_logged(self):
        self.runner.TRIALS_PER_LOG = 2
        with self.assertLogs(level='INFO') as logs:
            self.runner.run(abs, 4, label='absolute values')
        self.assertIn('absolute values: 4/4 trials', '\n'.join(logs.output))

    def test_worker_count_does_not_change_results(self):
        cfg = ExperimentConfig(params=ModelParams(n=150, K=12, P=600, d=1, g=0.6), trials=24, base_seed=5,
                               sweep=('g', (0.4, 0.6)))
        serial, parallel = io.StringIO(), io.StringIO()
        write_results_csv(serial, sweep_experiment(cfg, serial_runner()))
        write_results_csv(parallel, sweep_experiment(cfg, TrialRunner(workers=2)))
        self.assertEqual(serial.getvalue(), parallel.getvalue())


class TestRunResilienceTrials(TestCase):

    def test_no_friendships(self):
        result = run_resilience_trials(ExperimentConfig(params=complete_setting().replace(f=0.0), trials=10),
                                       serial_runner())
        self.assertEqual(result.successes, 0)
        self.assertEqual(result.empirical_prob, 0.0)

    def test_complete_graphs(self):
        result = run_resilience_trials(ExperimentConfig(params=complete_setting(), m=3, trials=10), serial_runner())
        self.assertEqual(result.empirical_prob, 1.0)
        self.assertLessEqual(result.ci_low, result.empirical_prob)
        self.assertEqual(result.ci_high, 1.0)
        self.assertIsNone(result.sweep_param)
        self.assertIsNone(result.critical_value)

    def test_prediction_attached(self):
        result = run_resilience_trials(ExperimentConfig(params=DESK_SCALE.replace(n=300), trials=5), serial_runner())
        self.assertAlmostEqual(result.predicted_limit, predicted_limit_prob(result.alpha, 0))
        self.assertTrue(0.0 <= result.ci_low <= result.empirical_prob <= result.ci_high <= 1.0)

    def test_reproducible(self):
        cfg = ExperimentConfig(params=ModelParams(n=200, K=20, P=2000, d=2, g=0.8), trials=20, base_seed=3)
        first = run_resilience_trials(cfg, serial_runner())
        second = run_resilience_trials(cfg, serial_runner())
        self.assertEqual(first.successes, second.successes)

    def test_min_degree_event(self):
        cfg = ExperimentConfig(params=complete_setting(), m=2, trials=4)
        result = run_min_degree_trials(cfg, serial_runner())
        self.assertEqual(result.event, 'min_degree')
        self.assertEqual(result.successes, 4)


    def test_no_failures_counts_connected_graphs(self):
        params = ModelParams(n=60, K=8, P=200, d=1, g=0.7)
        cfg = ExperimentConfig(params=params, trials=20, base_seed=8)
        result = run_resilience_trials(cfg, serial_runner())
        connected = sum(1 for i in range(20) if is_connected(gen_model_graph(params, trial_stream(8, i))))
        self.assertEqual(result.successes, connected)

    def test_sampled_failures_event(self):
        complete = run_resilience_trials(ExperimentConfig(params=complete_setting(), m=3, trials=4,
                                                          event='sampled_failures'), serial_runner())
        self.assertEqual(complete.successes, 4)
        params = ModelParams(n=60, K=8, P=200, d=1)
        exact = run_resilience_trials(ExperimentConfig(params=params, m=1, trials=20, base_seed=9), serial_runner())
        sampled = run_resilience_trials(ExperimentConfig(params=params, m=1, trials=20, base_seed=9,
                                                         event='sampled_failures'), serial_runner())
        self.assertGreaterEqual(sampled.successes, exact.successes)


class TestSweepExperiment(TestCase):

    def test_endpoints(self):
        cfg = ExperimentConfig(params=complete_setting(), trials=8, sweep=('g', (0.0, 1.0)))
        results = sweep_experiment(cfg, serial_runner())
        self.assertEqual([r.empirical_prob for r in results], [0.0, 1.0])
        self.assertEqual([r.sweep_value for r in results], [0.0, 1.0])

    def test_critical_value_carried(self):
        params = DESK_SCALE.replace(n=200)
        cfg = ExperimentConfig(params=params, trials=2, sweep=('g', (0.5,)))
        result = sweep_experiment(cfg, serial_runner())[0]
        self.assertAlmostEqual(result.critical_value, solve_critical('g', params.replace(g=0.5), 0).value)

    def test_predicted_limit_per_row(self):
        params = DESK_SCALE.replace(n=200, K=60)
        cfg = ExperimentConfig(params=params, m=1, trials=2, sweep=('g', (0.3, 0.6, 0.9)))
        s = float(edge_prob_overlap(60, 10000, 2))
        for result in sweep_experiment(cfg, serial_runner()):
            n = 200
            alpha = n * result.sweep_value * s - math.log(n) - math.log(math.log(n))
            self.assertAlmostEqual(result.alpha, alpha, places=9)
            self.assertAlmostEqual(result.predicted_limit, math.exp(-math.exp(-alpha)), places=9)

    def test_needs_sweep(self):
        with self.assertRaises(ValueError):
            sweep_experiment(ExperimentConfig(params=complete_setting()), serial_runner())


class TestDegreeLaw(TestCase):

    def test_no_edges(self):
        params = ModelParams(n=50, K=3, P=10, d=2, f=0.0)
        with self.assertLogs(level='WARNING'):
            report = degree_law_test(params, 10, runner=serial_runner())
        self.assertIsNotNone(report.guard)
        self.assertEqual(report.rows[0].empirical_mean, 50)
        self.assertEqual(report.rows[1].empirical_mean, 0)
        self.assertEqual(len(report.rows), 4)

    def test_total_variation_order_free(self):
        samples = np.array([0, 1, 1, 2, 0, 3, 1, 0])
        self.assertAlmostEqual(total_variation(samples, 1.0), total_variation(samples[::-1], 1.0))

    def test_total_variation_identical_law(self):
        self.assertAlmostEqual(total_variation(np.zeros(20, dtype=int), 0.0), 0.0)

    def test_chi_square_fit(self):
        rng = np.random.default_rng(4)
        _, p_value = poisson_chi_square(rng.poisson(3.0, size=4000), 3.0)
        self.assertGreater(p_value, 1e-4)

    def test_chi_square_single_bin(self):
        self.assertEqual(poisson_chi_square(np.zeros(10, dtype=int), 0.0), (None, None))


class TestDominance(TestCase):

    def test_complete_regime(self):
        report = dominance_test(complete_setting(), 10, 1, slack=0.0, runner=serial_runner())
        self.assertEqual(report.model_prob, 1.0)
        self.assertEqual(report.er_prob, 1.0)
        self.assertEqual(report.difference, 0.0)
        self.assertTrue(report.holds)

    def test_no_er_edges(self):
        report = dominance_test(complete_setting().replace(f=0.0), 10, 1, runner=serial_runner())
        self.assertEqual(report.er_prob, 0.0)
        self.assertTrue(report.holds)


class TestGap(TestCase):

    def test_event(self):
        self.assertFalse(gap_event(K4, 3))
        self.assertFalse(gap_event(STAR_5, 2))

    def test_complete_graphs(self):
        report = gap_test(complete_setting(), 10, 3, runner=serial_runner())
        self.assertEqual(report.events, 0)
        self.assertEqual(report.frequency, 0.0)

    def test_cost_guard(self):
        with self.assertRaises(ValueError):
            gap_test(DESK_SCALE, 10, 4, runner=serial_runner())


class TestCouplingValidity(TestCase):

    def test_small(self):
        report = coupling_validity_rate(200, 40, 2000, 1, 10, runner=serial_runner())
        self.assertEqual(report.containment_failures, 0)
        self.assertTrue(0.0 <= report.oracle_rate <= 1.0)
        self.assertLessEqual(report.valid_trials, report.trials)

    def test_oracle(self):
        cdf = (1 + 10 + 45 + 120 + 210 + 252) / 1024
        self.assertAlmostEqual(coupling_validity_oracle(1, 5, 10, 0.5), cdf)
        self.assertAlmostEqual(coupling_validity_oracle(3, 5, 10, 0.5), cdf ** 3)

    def test_infeasible(self):
        with self.assertRaises(InfeasibleCouplingError):
            coupling_validity_rate(1000, 10, 10000, 2, 5, runner=serial_runner())


class TestPoissonization(TestCase):

    def test_dense_chain(self):
        report = poissonization_test(30, 200, 0.1, 1, 40, runner=serial_runner())
        self.assertTrue(report.holds)
        self.assertGreaterEqual(report.binomial_prob, 0.9)
        self.assertIsNone(report.edge_check)
        self.assertTrue(0.0 < report.rho < 1.0)

    def test_sparse_edge_frequency(self):
        report = poissonization_test(200, 2000, 0.002, 1, 40, base_seed=1, runner=serial_runner())
        self.assertIsNotNone(report.edge_check)
        self.assertLess(abs(report.edge_z), 4.0)
        self.assertAlmostEqual(report.edge_prob_asymptotic, 0.008)
        expected = report.half_count_expected
        self.assertAlmostEqual(report.half_count_mean, expected, delta=0.1 * expected)

    def test_invalid_k(self):
        with self.assertRaises(ValueError):
            poissonization_test(30, 200, 0.1, 1, 4, k=0, runner=serial_runner())


@unittest.skipUnless(SLOW_TESTS, 'set RG_LAB_SLOW_TESTS to run the acceptance-sized experiments')
class TestAcceptanceScale(TestCase):

    def setUp(self):
        self.runner = TrialRunner()

    def test_zero_one_transition(self):
        # K = 40 keeps 1.3 g* inside [0, 1]
        params = DESK_SCALE.replace(K=40)
        g_star = solve_critical('g', params, 0).value
        self.assertLess(1.3 * g_star, 1.0)
        cfg = ExperimentConfig(params=params, trials=500, base_seed=1, sweep=('g', (0.7 * g_star, 1.3 * g_star)))
        below, above = sweep_experiment(cfg, self.runner)
        self.assertLessEqual(below.empirical_prob, 0.25)
        self.assertGreaterEqual(above.empirical_prob, 0.75)

    def test_limit_probability(self):
        n = 2000
        g = math.log(n) / n / float(edge_prob_overlap(36, 10000, 2))
        result = run_resilience_trials(ExperimentConfig(params=DESK_SCALE.replace(n=n, g=g), trials=1000,
                                                        base_seed=2), self.runner)
        self.assertAlmostEqual(result.alpha, 0.0, places=9)
        self.assertLess(abs(result.empirical_prob - math.exp(-1)), 0.12)

    def test_isolated_node_law(self):
        n = 2000
        g = math.log(n) / n / float(edge_prob_overlap(36, 10000, 2))
        report = degree_law_test(DESK_SCALE.replace(n=n, g=g), 2000, base_seed=3, runner=self.runner)
        isolated = report.rows[0]
        self.assertLess(abs(isolated.empirical_mean - 1.0), 0.15)
        self.assertLessEqual(isolated.total_variation, 0.08)

    def test_coupling(self):
        report = coupling_validity_rate(1000, 100, 10000, 2, 200, base_seed=4, runner=self.runner)
        self.assertGreaterEqual(report.oracle_rate, 0.99)
        self.assertGreaterEqual(report.rate, 0.99)
        self.assertEqual(report.containment_failures, 0)

    def test_gap(self):
        report = gap_test(DESK_SCALE.replace(g=0.9), 500, 2, base_seed=5, runner=self.runner)
        self.assertLessEqual(report.frequency, 0.02)

    def test_dominance(self):
        report = dominance_test(DESK_SCALE, 400, 1, base_seed=6, runner=self.runner)
        self.assertTrue(report.holds)
