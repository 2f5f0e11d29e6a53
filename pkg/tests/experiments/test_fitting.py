import math
import unittest

from cardy_lab.experiments.fitting import check_statistical_floor, fit_power_law
from cardy_lab.models.exceptions import DegeneratePoints, StatisticalFloor


SCALES = [1.0, 2.0, 4.0, 8.0, 16.0]


class Test_Power_Law_Fit(unittest.TestCase):

    def test_exact_power_law(self):
        fit = fit_power_law([(x, 3 * x**-0.5, 0.0) for x in SCALES])
        self.assertAlmostEqual(fit.slope, -0.5, places=10)
        self.assertAlmostEqual(fit.exponent, 0.5, places=10)
        self.assertAlmostEqual(fit.intercept, math.log(3), places=10)
        self.assertAlmostEqual(fit.r_squared, 1.0, places=10)
        self.assertEqual(fit.excluded, ())

    def test_weighted_exact_power_law(self):
        fit = fit_power_law([(x, x**-1.0, 0.01 * x**-1.0) for x in SCALES])
        self.assertAlmostEqual(fit.slope, -1.0, places=8)

    def test_transient_smallest_scale_is_excluded(self):
        points = [(x, 1 / x, 0.0) for x in SCALES]
        # lifts the first two points so that the second lies on the fitted line
        points[0] = (1.0, 2.0, 0.0)
        points[1] = (2.0, 0.5 * 2 ** (4 / 7), 0.0)
        fit = fit_power_law(points)
        self.assertEqual(fit.excluded, ((1.0, 2.0, 0.0),))
        self.assertEqual(len(fit.points), 4)
        self.assertEqual(fit.points[0][0], 2.0)

    def test_transient_rule_can_be_disabled(self):
        points = [(x, 1 / x, 0.0) for x in SCALES]
        points[0] = (1.0, 2.0, 0.0)
        points[1] = (2.0, 0.5 * 2 ** (4 / 7), 0.0)
        fit = fit_power_law(points, exclude_transient=False)
        self.assertEqual(fit.excluded, ())
        self.assertEqual(len(fit.points), 5)

    def test_non_positive_points_are_skipped(self):
        fit = fit_power_law([(x, x**-2.0, 0.0) for x in SCALES] + [(32.0, 0.0, 0.0)])
        self.assertEqual(len(fit.points), 5)
        self.assertAlmostEqual(fit.slope, -2.0, places=10)

    def test_too_few_points(self):
        with self.assertRaises(DegeneratePoints):
            fit_power_law([(1.0, 1.0, 0.0), (2.0, 0.5, 0.0), (4.0, 0.0, 0.0)])

    def test_equal_scales(self):
        with self.assertRaises(DegeneratePoints):
            fit_power_law([(2.0, 1.0, 0.0), (2.0, 0.5, 0.0), (2.0, 0.7, 0.0)])


class Test_Statistical_Floor(unittest.TestCase):

    def test_unresolved_deviations_raise(self):
        with self.assertRaises(StatisticalFloor):
            check_statistical_floor([0.01, 0.02, 0.5, 0.6], [0.01] * 4)

    def test_resolved_deviations_pass(self):
        check_statistical_floor([0.1, 0.2, 0.5, 0.01], [0.01] * 4)

    def test_no_deviations(self):
        check_statistical_floor([], [])


if __name__ == "__main__":  # pragma: no cover
    unittest.main()
