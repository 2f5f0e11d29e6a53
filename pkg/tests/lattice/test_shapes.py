import math
import unittest

import numpy as np

from cardy_lab.lattice.geometry import positions, shifted
from cardy_lab.lattice.shapes import DomainKind, DomainSpec, predicted_rate_ceiling
from cardy_lab.models.exceptions import InvalidSpec
from cardy_lab.models.structures import SQRT3


class Test_Domain_Spec(unittest.TestCase):

    def test_rectangle_boundary_starts_at_the_top_left_corner(self):
        shape = DomainSpec.rectangle(2.0).shape()
        self.assertAlmostEqual(abs(shape.point_at(0.0) - 1j), 0.0)
        self.assertAlmostEqual(shape.perimeter, 6.0)

    def test_rectangle_marks_are_its_corners(self):
        marks = DomainSpec.rectangle(2.0).marked_positions()
        np.testing.assert_allclose(marks, [1j, 0, 2, 2 + 1j], atol=1e-12)

    def test_triangle_is_centered_at_the_origin(self):
        marks = DomainSpec.triangle(SQRT3).marked_positions()
        np.testing.assert_allclose(np.abs(marks), 1.0)
        self.assertAlmostEqual(abs(marks.sum()), 0.0)

    def test_open_interior(self):
        shape = DomainSpec.half_disk().shape()
        self.assertTrue(shape.contains(0.5j))
        self.assertFalse(shape.contains(-0.5j))
        self.assertFalse(shape.contains(0.5 + 0j))
        self.assertTrue(shape.contains_closed(0.5 + 0j))

    def test_areas(self):
        self.assertAlmostEqual(DomainSpec.triangle().area(), SQRT3 / 4)
        self.assertAlmostEqual(DomainSpec.rectangle(2.0).area(), 2.0)
        self.assertAlmostEqual(DomainSpec.half_annulus(0.5, 1.0).area(), math.pi * 0.75 / 2)

    def test_projection_recovers_boundary_parameters(self):
        shape = DomainSpec.disk().shape()
        t, distance = shape.project(np.array([1.1 + 0j]))
        self.assertAlmostEqual(float(t[0]), 0.0, places=4)
        self.assertAlmostEqual(float(distance[0]), 0.1, places=4)


class Test_Validating_Spec(unittest.TestCase):

    def test_negative_size_is_invalid(self):
        with self.assertRaises(InvalidSpec):
            DomainSpec(DomainKind.DISK, size=-1.0).validate()

    def test_half_annulus_radii_must_be_ordered(self):
        with self.assertRaises(InvalidSpec):
            DomainSpec.half_annulus(1.0, 0.5).validate()

    def test_full_turn_sector_is_invalid(self):
        with self.assertRaises(InvalidSpec):
            DomainSpec.sector(2 * math.pi).validate()

    def test_marks_must_be_counter_clockwise(self):
        with self.assertRaises(InvalidSpec):
            DomainSpec.triangle(marked_points=(0.0, 0.6, 0.3)).validate()

    def test_two_marks_are_too_few(self):
        with self.assertRaises(InvalidSpec):
            DomainSpec.triangle(marked_points=(0.0, 0.5)).validate()

    def test_rhombus_needs_two_sites_per_side(self):
        with self.assertRaises(InvalidSpec):
            DomainSpec.rhombus(1, 3).validate()


class Test_Corner_Angles(unittest.TestCase):

    def test_rectangle_corners_are_all_marked(self):
        angles = DomainSpec.rectangle(2.0).corner_angles()
        np.testing.assert_allclose(angles.marked, [math.pi / 2] * 4)
        self.assertEqual(angles.unmarked, ())

    def test_half_disk_has_a_marked_flat_point(self):
        angles = DomainSpec.half_disk().corner_angles()
        np.testing.assert_allclose(angles.marked, [math.pi / 2, math.pi / 2, math.pi])

    def test_rate_ceilings(self):
        self.assertAlmostEqual(predicted_rate_ceiling(DomainSpec.rectangle()), 2 / 3)
        self.assertAlmostEqual(predicted_rate_ceiling(DomainSpec.triangle()), 2 / 3)
        self.assertAlmostEqual(predicted_rate_ceiling(DomainSpec.half_disk()), 1 / 3)


class Test_Geometry(unittest.TestCase):

    def test_positions_of_axial_coordinates(self):
        z = positions(np.array([1, 0]), np.array([0, 2]), 0.5)
        np.testing.assert_allclose(z, [0.5, 0.5 + 0.5j * SQRT3])

    def test_shifted_grid(self):
        grid = np.arange(6).reshape(2, 3)
        np.testing.assert_array_equal(shifted(grid, 1, 0, -1), [[3, 4, 5], [-1, -1, -1]])
        np.testing.assert_array_equal(shifted(grid, 0, -1, -1), [[-1, 0, 1], [-1, 3, 4]])


if __name__ == "__main__":  # pragma: no cover
    unittest.main()
