'''
Unit Tests for the statistics helpers.

The tests ensure that:
    1. The Welch t-test agrees with scipy on canned sample pairs.
    2. Identical samples give t = 0 and p = 1, and swapping samples only
       flips the sign of t.
    3. Degenerate inputs raise StatisticsError.
    4. The final window includes the 90% boundary and excludes the step
       before it.
    5. FinalScore leaves the standard error undefined for a single seed.
'''

import math
import unittest
import numpy as np
import pandas as pd
from scipy.stats import ttest_ind
from src.core.errors import MetricsError, StatisticsError
from src.pipeline.statistics import final_score, in_final_window, run_final_return, welch_t_test


class TestWelch(unittest.TestCase):

    '''
    Tester for the two-sided Welch t-test
    '''

    def test_matches_scipy(self):
        rng = np.random.default_rng(0)
        for n_a, n_b in [(2, 2), (3, 5), (5, 5), (10, 4), (7, 20), (2, 30), (4, 4), (6, 3), (15, 15), (8, 12)]:
            a = rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 3), size=n_a)
            b = rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 3), size=n_b)
            expected = ttest_ind(a, b, equal_var=False)
            result = welch_t_test(a, b)
            self.assertAlmostEqual(result.t, float(expected.statistic), delta=1e-9)
            self.assertAlmostEqual(result.p, float(expected.pvalue), delta=1e-9)

    def test_identical_samples(self):
        result = welch_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        self.assertEqual(result.t, 0.0)
        self.assertAlmostEqual(result.p, 1.0, places=12)

    def test_swap_flips_sign(self):
        a, b = [1.0, 2.5, 3.1, 0.7], [4.0, 5.2, 3.3]
        forward, backward = welch_t_test(a, b), welch_t_test(b, a)
        self.assertAlmostEqual(forward.t, -backward.t, places=12)
        self.assertAlmostEqual(forward.p, backward.p, places=12)
        self.assertAlmostEqual(forward.df, backward.df, places=12)

    def test_p_in_unit_interval(self):
        result = welch_t_test([0.0, 0.001], [1000.0, 1000.001])
        self.assertGreaterEqual(result.p, 0.0)
        self.assertLess(result.p, 1e-6)

    def test_too_few_values(self):
        with self.assertRaises(StatisticsError):
            welch_t_test([1.0], [1.0, 2.0])

    def test_zero_variance(self):
        with self.assertRaises(StatisticsError):
            welch_t_test([1.0, 1.0], [2.0, 2.0])

    def test_statistics_error_is_value_error(self):
        self.assertTrue(issubclass(StatisticsError, ValueError))


class TestFinalScore(unittest.TestCase):

    '''
    Tester for the final window and per-seed aggregation
    '''

    def test_window_boundary(self):
        self.assertTrue(in_final_window(900, 1000))
        self.assertFalse(in_final_window(899, 1000))
        self.assertTrue(in_final_window(1000, 1000))

    def test_run_final_return(self):
        df = pd.DataFrame({'step': [50, 90, 100, 100],
                           'tier': ['clean', 'clean', 'clean', 'video_hard'],
                           'mean_return': [1.0, 2.0, 4.0, 8.0]})
        self.assertEqual(run_final_return(df, 'clean', 100), 3.0)
        self.assertEqual(run_final_return(df, 'video_hard', 100), 8.0)

    def test_empty_window(self):
        df = pd.DataFrame({'step': [10], 'tier': ['clean'], 'mean_return': [1.0]})
        with self.assertRaises(MetricsError):
            run_final_return(df, 'clean', 100)

    def test_single_seed(self):
        score = final_score([3.5])
        self.assertEqual(score.mean, 3.5)
        self.assertIsNone(score.stderr)
        self.assertEqual(score.n_seeds, 1)

    def test_mean_and_stderr(self):
        '''Values 1..5: sample std √2.5, SE √2.5/√5 = √0.5.'''
        score = final_score([1.0, 2.0, 3.0, 4.0, 5.0])
        self.assertEqual(score.mean, 3.0)
        self.assertAlmostEqual(score.stderr, math.sqrt(0.5), places=12)

    def test_no_runs(self):
        with self.assertRaises(StatisticsError):
            final_score([])


if __name__ == '__main__':
    unittest.main()
