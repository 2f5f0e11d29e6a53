import math
import unittest

from cardy_lab.models.structures import (
    ArmSpec,
    Color,
    DualVertex,
    FitResult,
    Orientation,
    SiteCoord,
    SQRT3,
    TAU,
)


class Test_Site_Coordinates(unittest.TestCase):

    def test_site_position_uses_axial_coordinates(self):
        self.assertEqual(SiteCoord(1, 0).position(2.0), complex(2, 0))
        z = SiteCoord(0, 1).position()
        self.assertAlmostEqual(z.real, 0.5)
        self.assertAlmostEqual(z.imag, SQRT3 / 2)

    def test_every_site_has_six_neighbors_at_unit_distance(self):
        site = SiteCoord(3, -2)
        neighbors = site.neighbors()
        self.assertEqual(len(set(neighbors)), 6)
        for other in neighbors:
            self.assertTrue(site.is_neighbor(other))
            self.assertAlmostEqual(abs(other.position() - site.position()), 1.0)

    def test_site_is_not_its_own_neighbor(self):
        self.assertFalse(SiteCoord(0, 0).is_neighbor(SiteCoord(0, 0)))
        self.assertFalse(SiteCoord(0, 0).is_neighbor(SiteCoord(1, 1)))


class Test_Dual_Vertices(unittest.TestCase):

    def test_up_and_down_faces_have_mutually_adjacent_corners(self):
        for orientation in Orientation:
            a, b, c = DualVertex(SiteCoord(2, 5), orientation).corners()
            self.assertTrue(a.is_neighbor(b) and b.is_neighbor(c) and a.is_neighbor(c))

    def test_dual_vertex_lies_at_the_barycenter(self):
        vertex = DualVertex(SiteCoord(0, 0), Orientation.UP)
        self.assertAlmostEqual(abs(vertex.position() - complex(0.5, SQRT3 / 6)), 0.0)


class Test_Colors(unittest.TestCase):

    def test_swapped_color(self):
        self.assertEqual(Color.OPEN.swapped(), Color.CLOSED)
        self.assertEqual(Color.CLOSED.swapped(), Color.OPEN)

    def test_tau_is_a_primitive_cube_root_of_unity(self):
        self.assertAlmostEqual(abs(TAU**3 - 1), 0.0)
        self.assertAlmostEqual(abs(1 + TAU + TAU**2), 0.0)


class Test_Arm_Spec(unittest.TestCase):

    def test_radii_must_be_ordered(self):
        with self.assertRaises(ValueError):
            ArmSpec(4.0, 2.0, 1)

    def test_arm_count_is_limited(self):
        with self.assertRaises(ValueError):
            ArmSpec(1.0, 2.0, 0)
        with self.assertRaises(ValueError):
            ArmSpec(1.0, 2.0, 7)

    def test_full_turn(self):
        self.assertTrue(ArmSpec(1.0, 2.0, 2, 2 * math.pi).full_turn)
        self.assertFalse(ArmSpec(1.0, 2.0, 2).full_turn)


class Test_Fit_Result(unittest.TestCase):

    def test_exponent_is_the_negated_slope(self):
        points = ((1.0, 1.0, 0.0), (2.0, 0.5, 0.0), (4.0, 0.25, 0.0))
        fit = FitResult(slope=-1.0, intercept=0.0, stderr=0.0, r_squared=1.0, points=points)
        self.assertEqual(fit.exponent, 1.0)
        self.assertEqual(fit.as_dict()["points"][1], [2.0, 0.5, 0.0])

    def test_fit_needs_three_points(self):
        with self.assertRaises(ValueError):
            FitResult(slope=-1.0, intercept=0.0, stderr=0.0, r_squared=1.0, points=((1.0, 1.0, 0.0),))


if __name__ == "__main__":  # pragma: no cover
    unittest.main()
