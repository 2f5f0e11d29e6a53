import unittest

import numpy as np

from cardy_lab.conformal.special import (
    APEX,
    apply_mobius,
    cardy_probability,
    sc_derivative,
    sc_half_plane_to_triangle,
    sc_triangle_to_half_plane,
    three_point_mobius,
)
from cardy_lab.models.exceptions import OutOfRange


class Test_Cardy_Formula(unittest.TestCase):

    def test_symmetric_cross_ratio_gives_one_half(self):
        self.assertAlmostEqual(cardy_probability(0.5), 0.5, places=12)

    def test_complementary_cross_ratios_add_up_to_one(self):
        for m in (0.1, 0.27, 0.8):
            self.assertAlmostEqual(cardy_probability(m) + cardy_probability(1 - m), 1.0, places=10)

    def test_probability_increases_with_the_cross_ratio(self):
        values = [cardy_probability(m) for m in np.linspace(0.05, 0.95, 19)]
        self.assertEqual(values, sorted(values))

    def test_cross_ratio_outside_the_unit_interval(self):
        for m in (0.0, 1.0, 1.5, -0.2):
            with self.assertRaises(OutOfRange):
                cardy_probability(m)


class Test_Triangle_Map(unittest.TestCase):

    def test_special_points(self):
        self.assertAlmostEqual(abs(sc_half_plane_to_triangle(0j)), 0.0, places=12)
        self.assertAlmostEqual(abs(sc_half_plane_to_triangle(1 + 0j) - 1), 0.0, places=10)
        self.assertAlmostEqual(abs(sc_half_plane_to_triangle(0.5 + 0j) - 0.5), 0.0, places=10)
        self.assertEqual(sc_half_plane_to_triangle(complex(np.inf, 0.0)), APEX)

    def test_real_axis_maps_to_the_base(self):
        values = sc_half_plane_to_triangle(np.array([0.1, 0.4, 0.9]) + 0j)
        np.testing.assert_allclose(values.imag, 0.0, atol=1e-12)
        self.assertTrue(np.all(np.diff(values.real) > 0))

    def test_integration_rules_agree(self):
        w = np.array([0.3 + 0.2j, 0.7 + 0.05j, 2.0 + 1.0j, -3.0 + 0.5j, 0.1 + 4.0j])
        np.testing.assert_allclose(
            sc_half_plane_to_triangle(w), sc_half_plane_to_triangle(w, method="quad"), atol=1e-10
        )

    def test_unknown_method(self):
        with self.assertRaises(ValueError):
            sc_half_plane_to_triangle(0.5j, method="simpson")

    def test_derivative_matches_difference_quotient(self):
        w, h = 0.3 + 0.5j, 1e-6
        numeric = (sc_half_plane_to_triangle(w + h) - sc_half_plane_to_triangle(w - h)) / (2 * h)
        self.assertAlmostEqual(abs(numeric - sc_derivative(w)) / abs(numeric), 0.0, places=6)

    def test_inverse_recovers_half_plane_points(self):
        w = np.array([0.3 + 0.4j, -1.0 + 2.0j, 1.5 + 0.2j])
        np.testing.assert_allclose(sc_triangle_to_half_plane(sc_half_plane_to_triangle(w)), w, atol=1e-7)


class Test_Mobius(unittest.TestCase):

    def test_three_points_go_to_zero_one_infinity(self):
        for p, q, s in ((1j, 2 + 0j, -1 + 0j), (complex(np.inf, 0), 0j, 1 + 0j), (0j, complex(np.inf, 0), 1 + 0j)):
            images = apply_mobius(three_point_mobius(p, q, s), np.array([p, q, s]))
            self.assertAlmostEqual(abs(images[0]), 0.0, places=12)
            self.assertAlmostEqual(abs(images[1] - 1), 0.0, places=12)
            self.assertTrue(np.isinf(images[2]))


if __name__ == "__main__":  # pragma: no cover
    unittest.main()
