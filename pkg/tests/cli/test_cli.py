import io
import json
import os
import unittest

from rich.console import Console

from cardy_lab.cli import EXIT_FAILED, EXIT_INVALID, EXIT_OK, run_cli
from cardy_lab.results import MANIFEST_NAME

from tests.utils import TemporaryDirectoryMixin, crossing_config, triangle_config, write_config


class _CliTestCase(TemporaryDirectoryMixin, unittest.TestCase):

    def run_cli(self, *argv: str) -> int:
        self.out = io.StringIO()
        self.err = io.StringIO()
        return run_cli(list(argv), Console(file=self.out, width=200), Console(file=self.err, width=200))


class Test_Arguments(_CliTestCase):

    def test_command_is_required(self):
        self.assertEqual(self.run_cli(), EXIT_INVALID)
        self.assertIn("Invalid arguments", self.err.getvalue())

    def test_missing_config_file(self):
        self.assertEqual(self.run_cli("crossing", "-c", os.path.join(self.directory, "none.json")), EXIT_INVALID)
        self.assertIn("not found", self.err.getvalue())

    def test_version(self):
        self.assertEqual(self.run_cli("--version"), EXIT_OK)

    def test_cardy_needs_exactly_one_source(self):
        self.assertEqual(self.run_cli("cardy"), EXIT_INVALID)
        self.assertEqual(self.run_cli("cardy", "--cross-ratio", "0.5", "--corner-ratios"), EXIT_INVALID)


class Test_Limits(_CliTestCase):

    def test_cross_ratio(self):
        self.assertEqual(self.run_cli("cardy", "--cross-ratio", "0.5"), EXIT_OK)
        self.assertEqual(self.out.getvalue().strip(), "0.5")

    def test_cross_ratio_out_of_range(self):
        self.assertEqual(self.run_cli("cardy", "--cross-ratio", "1.5"), EXIT_INVALID)
        self.assertIn("Invalid input", self.err.getvalue())

    def test_limit_of_a_configured_domain(self):
        path = write_config(self.directory, crossing_config(self.directory))
        self.assertEqual(self.run_cli("cardy", "-c", path), EXIT_OK)
        data = json.loads(self.out.getvalue())
        self.assertAlmostEqual(data["cross_ratio"], 0.5, places=9)
        self.assertAlmostEqual(data["limit"], data["carleson"], places=8)

    def test_half_annulus_ratios(self):
        self.assertEqual(self.run_cli("cardy", "--corner-ratios"), EXIT_OK)
        self.assertIn("small-r limit", self.out.getvalue())

    def test_map_of_the_triangle_center(self):
        path = write_config(self.directory, triangle_config(self.directory))
        self.assertEqual(self.run_cli("map", "-c", path, "--point", "0", "0"), EXIT_OK)
        phi = json.loads(self.out.getvalue())["phi"]
        self.assertAlmostEqual(phi[0], 0.0, places=12)
        self.assertAlmostEqual(phi[1], 0.0, places=12)

    def test_map_outside_the_domain(self):
        path = write_config(self.directory, triangle_config(self.directory))
        self.assertEqual(self.run_cli("map", "-c", path, "--point", "3", "3"), EXIT_INVALID)


class Test_Verify(_CliTestCase):

    def test_duality_check_passes(self):
        self.assertEqual(self.run_cli("verify", "duality"), EXIT_OK)
        self.assertIn("0 mismatches", self.out.getvalue())

    def test_unknown_check(self):
        self.assertEqual(self.run_cli("verify", "everything"), EXIT_INVALID)


class Test_Runs(_CliTestCase):

    def setUp(self):
        super().setUp()
        self.output = os.path.join(self.directory, "run")
        self.config = write_config(self.directory, crossing_config(self.output))

    def test_crossing_run_writes_its_files(self):
        code = self.run_cli("crossing", "-c", self.config)
        self.assertIn(code, (EXIT_OK, EXIT_FAILED))
        for name in ("crossing.csv", "crossing_summary.json", MANIFEST_NAME):
            self.assertTrue(os.path.isfile(os.path.join(self.output, name)))
        self.assertIn("crossing (seed 7)", self.out.getvalue())

    def test_overrides_are_validated(self):
        self.assertEqual(self.run_cli("crossing", "-c", self.config, "--trials", "5"), EXIT_INVALID)
        self.assertIn("trials", self.err.getvalue())

    def test_experiment_must_fit_the_domain(self):
        self.assertEqual(self.run_cli("observable", "-c", self.config), EXIT_INVALID)

    def test_resumed_run_reproduces_the_points(self):
        first = self.run_cli("crossing", "-c", self.config)
        with open(os.path.join(self.output, "crossing.csv")) as f:
            points = f.read()
        manifest = os.path.join(self.output, MANIFEST_NAME)
        self.assertEqual(self.run_cli("resume", manifest, "-c", self.config), first)
        with open(os.path.join(self.output, "crossing.csv")) as f:
            self.assertEqual(f.read(), points)

    def test_resume_with_another_seed_is_refused(self):
        self.run_cli("crossing", "-c", self.config)
        manifest = os.path.join(self.output, MANIFEST_NAME)
        self.assertEqual(self.run_cli("crossing", "-c", self.config, "--seed", "8", "--resume", manifest), EXIT_INVALID)

    def test_sample(self):
        self.assertEqual(self.run_cli("sample", "-c", self.config, "--delta", "0.25", "--trial", "2"), EXIT_OK)
        self.assertTrue(os.path.isfile(os.path.join(self.output, "sample_delta=0.25_trial=2.csv")))


if __name__ == "__main__":  # pragma: no cover
    unittest.main()
