import math
import unittest

from cardy_lab.experiments.verification import (
    KIND_SITE_LIMIT,
    VerificationReport,
    enumeration_domains,
    kind_domains,
    small_domain,
    symmetric_triangle,
    verify_color_switching,
    verify_color_symmetry,
    verify_duality,
    verify_enumeration,
    verify_error_bars,
    verify_maps,
    verify_monotonicity,
    verify_switching_sampled,
)
from cardy_lab.lattice.domain import discretize
from cardy_lab.lattice.shapes import DomainSpec
from cardy_lab.percolation.engine import crossing_occurs


class Test_Report(unittest.TestCase):

    def test_failures_are_counted_and_listed(self):
        report = VerificationReport("demo")
        report.record(True, "fine")
        report.record(False, "broken")
        self.assertFalse(report.passed)
        self.assertEqual(report.as_dict()["failures"], ["broken"])
        self.assertEqual((report.checks, report.mismatches), (2, 1))


class Test_Exhaustive_Checks(unittest.TestCase):

    def test_domains_respect_the_site_limit(self):
        domains = enumeration_domains(9)
        names = [name for name, _ in domains]
        for name in ("triangle-7", "rhombus-3x3", "rhombus-3x3-three-marks"):
            self.assertIn(name, names)
        self.assertNotIn("triangle-16", names)
        self.assertTrue(all(dd.n_sites <= 9 for _, dd in domains))
        self.assertEqual(symmetric_triangle().n_sites, 16)

    def test_fast_detectors_match_the_oracles(self):
        report = verify_enumeration(max_sites=9)
        self.assertTrue(report.passed, report.as_dict())
        domains = report.details["domains"]
        self.assertEqual((domains["triangle-7"], domains["rhombus-3x3"]), (7, 9))

    def test_stride_must_be_positive(self):
        with self.assertRaises(ValueError):
            verify_enumeration(max_sites=9, stride=0)

    def test_duality_of_the_rhombus(self):
        report = verify_duality()
        self.assertTrue(report.passed, report.as_dict())
        self.assertEqual(report.details["probability"], "1/2")

    def test_color_symmetry(self):
        self.assertTrue(verify_color_symmetry(discretize(DomainSpec.rhombus(3, 3), 1.0)).passed)

    def test_monotonicity(self):
        self.assertTrue(verify_monotonicity(discretize(DomainSpec.rectangle(), 0.25), trials=10).passed)

    def test_color_switching_is_exact_on_the_small_triangle(self):
        report = verify_color_switching(discretize(DomainSpec.triangle(math.sqrt(3)), 1.0))
        self.assertGreater(report.checks, 0)
        self.assertTrue(report.passed, report.as_dict())
        self.assertEqual(report.details["sites"], 7)

    def test_color_switching_is_exact_on_the_symmetric_triangle(self):
        report = verify_color_switching(symmetric_triangle())
        self.assertEqual(report.details["sites"], 16)
        self.assertGreater(report.checks, 0)
        self.assertEqual(report.mismatches, 0, report.as_dict())
        self.assertEqual(report.details["max_discrepancy"], "0")


class Test_Domain_Kinds(unittest.TestCase):

    def test_every_kind_has_a_small_discretization(self):
        domains = kind_domains()
        self.assertEqual(len(domains), 5)
        for name, dd in domains:
            self.assertLessEqual(dd.n_sites, KIND_SITE_LIMIT, name)
            self.assertIn(dd.n_arcs, (3, 4), name)

    def test_small_domain_keeps_the_largest_fitting_mesh(self):
        dd = small_domain(DomainSpec.triangle(), 16)
        self.assertLessEqual(dd.n_sites, 16)
        self.assertEqual(dd.n_arcs, 3)

    def test_detectors_match_the_oracles_on_every_kind(self):
        domains = kind_domains()
        report = verify_enumeration(max_sites=KIND_SITE_LIMIT, domains=domains)
        self.assertTrue(report.passed, report.as_dict())
        self.assertEqual(set(report.details["domains"]), {name for name, _ in domains})

    def test_detectors_match_the_oracles_on_the_symmetric_triangle_and_the_arm_sector(self):
        domains = [(name, dd) for name, dd in enumeration_domains(16) if name in ("triangle-16", "arm-sector")]
        self.assertEqual(len(domains), 2)
        report = verify_enumeration(max_sites=16, stride=61, domains=domains)
        self.assertTrue(report.passed, report.as_dict())
        self.assertEqual(report.details["domains"], {"arm-sector": 11, "triangle-16": 16})


class Test_Statistical_Checks(unittest.TestCase):

    def test_sampled_switching_agrees_on_the_half_disk(self):
        dd = discretize(DomainSpec.half_disk(), 0.2)
        report = verify_switching_sampled(dd, trials=3000, seed=11)
        self.assertGreater(report.checks, 0)
        self.assertTrue(report.passed, report.as_dict())
        self.assertLessEqual(report.details["max_abs_z"], 5.0)

    def test_error_bars_cover_the_exact_value(self):
        dd = discretize(DomainSpec.rhombus(3, 3), 1.0)
        report = verify_error_bars(dd, lambda cfg: crossing_occurs(cfg, 0, 2), trials=200, repetitions=20)
        self.assertEqual(report.details["exact"], "1/2")
        self.assertGreaterEqual(report.details["coverage"], 0.85)


class Test_Map_Checks(unittest.TestCase):

    def test_map_checks_pass(self):
        report = verify_maps()
        self.assertTrue(report.passed, report.as_dict())


if __name__ == "__main__":  # pragma: no cover
    unittest.main()
