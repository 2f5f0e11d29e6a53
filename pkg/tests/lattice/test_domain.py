import math
import unittest

import numpy as np

from cardy_lab.lattice.domain import DiscreteDomain, annular_sector_domain, discretize, face_adjacency
from cardy_lab.lattice.shapes import DomainSpec
from cardy_lab.models.exceptions import InvalidSpec, MeshTooCoarse, UnknownArc, UnknownVertex
from cardy_lab.models.structures import DualVertex, Orientation, SiteCoord


class Test_Discretizing_Rectangle(unittest.TestCase):

    def setUp(self):
        self.dd = discretize(DomainSpec.rectangle(), 0.1)

    def test_domain_has_four_arcs_and_marked_sites(self):
        self.assertEqual(self.dd.n_arcs, 4)
        self.assertEqual(len(set(self.dd.marked_site_indices)), 4)

    def test_every_boundary_site_belongs_to_an_arc(self):
        boundary = self.dd.is_boundary
        self.assertTrue(np.all(self.dd.arc_labels[boundary] >= 0))
        self.assertTrue(np.all(self.dd.arc_labels[~boundary] == -1))

    def test_marked_site_touches_both_adjacent_arcs(self):
        for a, marked in enumerate(self.dd.marked_site_indices):
            self.assertTrue(self.dd.touch[marked, a])
            self.assertTrue(self.dd.touch[marked, (a - 1) % 4])

    def test_every_arc_has_at_least_two_sites(self):
        for a in range(4):
            self.assertGreaterEqual(self.dd.arc_sites(a).size, 2)

    def test_unknown_arc_is_rejected(self):
        with self.assertRaises(UnknownArc):
            self.dd.arc_sites(4)

    def test_sites_are_stored_lexicographically(self):
        order = np.lexsort((self.dd.j, self.dd.i))
        np.testing.assert_array_equal(order, np.arange(self.dd.n_sites))

    def test_site_index_inverts_site(self):
        for index in (0, self.dd.n_sites // 2, self.dd.n_sites - 1):
            self.assertEqual(self.dd.site_index(self.dd.site(index)), index)

    def test_site_outside_the_domain_is_unknown(self):
        with self.assertRaises(UnknownVertex):
            self.dd.site_index(SiteCoord(1000, 1000))

    def test_neighbors_are_symmetric(self):
        neighbors = self.dd.neighbors
        for s in range(0, self.dd.n_sites, 7):
            for other in neighbors[s][neighbors[s] >= 0]:
                self.assertIn(s, neighbors[other])

    def test_left_side_is_the_first_arc(self):
        left = self.dd.positions[self.dd.arc_labels == 0]
        self.assertTrue(np.all(left.real < 0.1))


class Test_Discretizing_Other_Domains(unittest.TestCase):

    def test_rhombus_block_is_exact(self):
        dd = discretize(DomainSpec.rhombus(3, 3), 1.0)
        self.assertEqual(dd.n_sites, 9)
        self.assertEqual(dd.n_arcs, 4)
        # only the center has all six neighbors
        self.assertEqual(int((~dd.is_boundary).sum()), 1)

    def test_triangle_has_three_arcs(self):
        dd = discretize(DomainSpec.triangle(), 0.1)
        self.assertEqual(dd.n_arcs, 3)

    def test_finer_mesh_gives_more_sites(self):
        spec = DomainSpec.half_disk()
        self.assertGreater(discretize(spec, 0.05).n_sites, discretize(spec, 0.1).n_sites)

    def test_non_positive_mesh_is_rejected(self):
        with self.assertRaises(InvalidSpec):
            discretize(DomainSpec.triangle(), 0.0)

    def test_too_coarse_mesh_is_rejected(self):
        with self.assertRaises(MeshTooCoarse):
            discretize(DomainSpec.rectangle(), 10.0)


class Test_Faces(unittest.TestCase):

    def setUp(self):
        self.dd = discretize(DomainSpec.triangle(), 0.2)

    def test_faces_have_three_corners_in_the_domain(self):
        corners = self.dd.face_corners
        self.assertEqual(corners.shape, (self.dd.n_faces, 3))
        self.assertTrue(np.all(corners >= 0))

    def test_face_index_inverts_face(self):
        for index in range(0, self.dd.n_faces, 5):
            self.assertEqual(self.dd.face_index(self.dd.face(index)), index)

    def test_face_degree_is_at_most_three(self):
        self.assertTrue(np.all(self.dd.face_degree <= 3))
        self.assertTrue(np.any(self.dd.face_degree == 3))

    def test_adjacent_faces_share_the_crossed_edge(self):
        vertex = self.dd.face(int(np.argmax(self.dd.face_degree)))
        for other, (p, q) in face_adjacency(self.dd, vertex):
            self.assertIn(p, vertex.corners())
            self.assertIn(q, vertex.corners())
            self.assertIn(p, other.corners())
            self.assertIn(q, other.corners())

    def test_missing_dual_vertex_is_unknown(self):
        with self.assertRaises(UnknownVertex):
            self.dd.face_index(DualVertex(SiteCoord(1000, 0), Orientation.UP))

    def test_hexagon_ring_surrounds_its_site(self):
        rings = self.dd.hexagon_faces
        covered = np.flatnonzero(np.all(rings >= 0, axis=1))
        self.assertGreater(covered.size, 0)
        for s in covered:
            distance = np.abs(self.dd.face_positions[rings[s]] - self.dd.positions[s])
            np.testing.assert_allclose(distance, self.dd.mesh / math.sqrt(3))


class Test_Exterior_Ring(unittest.TestCase):

    def setUp(self):
        self.dd = discretize(DomainSpec.triangle(), 0.2)
        self.ring = self.dd.exterior
        self.outside = np.setdiff1d(np.arange(self.ring.domain.n_sites), self.ring.inner)

    def test_padded_domain_keeps_every_site_and_face(self):
        padded = self.ring.domain
        for s in range(self.dd.n_sites):
            self.assertEqual(padded.site(int(self.ring.inner[s])), self.dd.site(s))
        for f in range(self.dd.n_faces):
            self.assertEqual(padded.face(int(self.ring.faces[f])), self.dd.face(f))

    def test_ring_sites_are_outside_next_to_the_domain(self):
        padded = self.ring.domain
        self.assertGreater(self.outside.size, 0)
        self.assertTrue(np.all(self.ring.labels[self.ring.inner] == -1))
        for r in self.outside:
            around = padded.neighbors[r]
            self.assertTrue(np.isin(around[around >= 0], self.ring.inner).any())

    def test_every_ring_site_takes_an_arc(self):
        labels = self.ring.labels[self.outside]
        self.assertTrue(np.all((labels >= 0) & (labels < 3)))
        self.assertEqual(set(labels.tolist()), {0, 1, 2})

    def test_only_boundary_sites_touch_the_ring(self):
        touching = self.ring.touch.any(axis=1)
        np.testing.assert_array_equal(touching, self.dd.is_boundary)

    def test_ring_touch_matches_the_corner_convention_on_the_rhombus(self):
        dd = discretize(DomainSpec.rhombus(3, 3), 1.0)
        np.testing.assert_array_equal(dd.exterior.touch, dd.touch)

    def test_walls_and_faces_follow_the_labels(self):
        walls = self.ring.walls(0, 1)
        np.testing.assert_array_equal(walls, np.isin(self.ring.labels, (0, 1)))
        seeds = self.ring.faces_touching(2)
        self.assertTrue(seeds.any())
        self.assertFalse(seeds[self.ring.faces].any())

    def test_domain_without_arcs_has_an_unlabeled_ring(self):
        dd = DiscreteDomain.build(1.0, [SiteCoord(0, 0), SiteCoord(1, 0)])
        self.assertEqual(dd.exterior.touch.shape, (2, 0))
        self.assertTrue(np.all(dd.exterior.labels == -1))


class Test_Building_Domains(unittest.TestCase):

    def test_two_site_path(self):
        dd = DiscreteDomain.build(1.0, [SiteCoord(0, 0), SiteCoord(1, 0)])
        self.assertEqual(dd.n_sites, 2)
        self.assertEqual(dd.n_arcs, 0)
        self.assertIn(1, dd.neighbors[0])

    def test_duplicate_sites_are_rejected(self):
        with self.assertRaises(InvalidSpec):
            DiscreteDomain.build(1.0, [SiteCoord(0, 0), SiteCoord(0, 0)])

    def test_empty_domain_is_rejected(self):
        with self.assertRaises(MeshTooCoarse):
            DiscreteDomain.build(1.0, [])

    def test_annular_sector_holds_the_sites_of_the_closed_sector(self):
        dd = annular_sector_domain(1.0, 2.0, 6.0, math.pi)
        modulus = np.abs(dd.positions)
        self.assertTrue(np.all((modulus >= 2.0 - 1e-9) & (modulus <= 6.0 + 1e-9)))
        self.assertTrue(np.all(dd.positions.imag >= -1e-9))
        self.assertIn(SiteCoord(2, 0), dd.sites)
        self.assertIn(SiteCoord(-6, 0), dd.sites)


if __name__ == "__main__":  # pragma: no cover
    unittest.main()
