import json
import os
import unittest

from cardy_lab import __version__
from cardy_lab.config import parse_config, with_overrides
from cardy_lab.models.exceptions import ManifestMismatch, ParseError, StatisticalFloor
from cardy_lab.models.structures import FitResult
from cardy_lab.results import (
    PointResult,
    RunManifest,
    RunOutcome,
    fmt,
    read_csv,
    write_csv,
    write_summary,
)

from tests.utils import TemporaryDirectoryMixin, crossing_config


class Test_Point_Files(TemporaryDirectoryMixin, unittest.TestCase):

    def test_numbers_are_written_exactly(self):
        self.assertEqual(float(fmt(0.1)), 0.1)
        self.assertEqual(fmt(0.5), "0.5")

    def test_rows_are_sorted_by_scale(self):
        path = os.path.join(self.directory, "points.csv")
        points = [PointResult(8.0, 0.25, 0.01, 100, 3), PointResult(2.0, 0.5, 0.05, 100, 3, first_trial=7)]
        write_csv(path, points)
        loaded = read_csv(path)
        self.assertEqual([p.scale for p in loaded], [2.0, 8.0])
        self.assertEqual(loaded[0], points[1])
        with open(path) as f:
            self.assertEqual(f.readline(), "scale,estimate,stderr,trials,seed,first_trial\n")

    def test_malformed_rows_are_parse_errors(self):
        path = os.path.join(self.directory, "points.csv")
        with open(path, "w") as f:
            f.write("scale,estimate,stderr,trials,seed,first_trial\n1.0,x,0,1,2,0\n")
        with self.assertRaises(ParseError) as caught:
            read_csv(path)
        self.assertIn("line 2", str(caught.exception))

    def test_summary_carries_config_and_version(self):
        path = os.path.join(self.directory, "summary.json")
        config = parse_config(json.dumps(crossing_config(self.directory)))
        write_summary(path, config, {"experiment": "crossing", "value": 1 + 2j}, wall_time=1.5)
        with open(path) as f:
            data = json.load(f)
        self.assertEqual(data["version"], __version__)
        self.assertEqual(data["config"]["seed"], 7)
        self.assertEqual(data["value"], [1.0, 2.0])
        self.assertEqual(data["wall_time"], 1.5)


class Test_Run_Manifest(TemporaryDirectoryMixin, unittest.TestCase):

    def setUp(self):
        super().setUp()
        self.config = parse_config(json.dumps(crossing_config(self.directory)))
        self.path = os.path.join(self.directory, "run", "manifest.json")

    def test_completed_points_survive_a_reload(self):
        manifest = RunManifest(self.path, self.config)
        manifest.record("0.25", PointResult(0.25, 0.5, 0.05, 100, 11))
        manifest.add_output("points.csv")
        manifest.add_output("points.csv")
        manifest.finish()
        loaded = RunManifest.load(self.path, self.config)
        self.assertEqual(loaded.completed("0.25"), PointResult(0.25, 0.5, 0.05, 100, 11))
        self.assertIsNone(loaded.completed("0.125"))
        self.assertEqual(loaded.completed_keys(), ["0.25"])
        self.assertEqual(loaded.outputs, ["points.csv"])
        self.assertEqual(loaded.status, "complete")
        self.assertFalse(os.path.exists(self.path + ".tmp"))

    def test_manifest_without_config_uses_the_stored_one(self):
        RunManifest(self.path, self.config).save()
        loaded = RunManifest.load(self.path)
        self.assertEqual(loaded.config_hash, RunManifest(self.path, self.config).config_hash)
        self.assertEqual(loaded.status, "running")

    def test_changed_configuration_is_refused(self):
        RunManifest(self.path, self.config).save()
        with self.assertRaises(ManifestMismatch):
            RunManifest.load(self.path, with_overrides(self.config, seed=8))

    def test_worker_count_may_change(self):
        RunManifest(self.path, self.config).save()
        loaded = RunManifest.load(self.path, with_overrides(self.config, workers=4))
        self.assertEqual(loaded.config.workers, 4)

    def test_tampered_manifest_is_refused(self):
        RunManifest(self.path, self.config).save()
        with open(self.path) as f:
            data = json.load(f)
        data["config"]["trials"] = 500
        with open(self.path, "w") as f:
            json.dump(data, f)
        with self.assertRaises(ManifestMismatch):
            RunManifest.load(self.path)

    def test_malformed_manifest_is_a_parse_error(self):
        os.makedirs(os.path.dirname(self.path))
        with open(self.path, "w") as f:
            f.write("{\n  \"config\": \n")
        with self.assertRaises(ParseError):
            RunManifest.load(self.path)


class Test_Run_Outcome(unittest.TestCase):

    def setUp(self):
        points = ((1.0, 1.1, 0.0), (4.0, 0.55, 0.0), (16.0, 0.28, 0.0))
        self.fit = FitResult(slope=-0.5, intercept=0.1, stderr=0.01, r_squared=0.99, points=points)

    def test_result_is_the_fit(self):
        outcome = RunOutcome("crossing", [], self.fit)
        self.assertIs(outcome.result(), self.fit)
        self.assertEqual(outcome.summary()["exponent"], self.fit.exponent)

    def test_failure_is_raised_by_result(self):
        outcome = RunOutcome("crossing", [], self.fit, error=StatisticalFloor("deviations below noise"))
        with self.assertRaises(StatisticalFloor):
            outcome.result()
        self.assertEqual(outcome.summary()["error"], "StatisticalFloor: deviations below noise")

    def test_experiment_without_fit(self):
        with self.assertRaises(ValueError):
            RunOutcome("half_annulus", []).result()


if __name__ == "__main__":  # pragma: no cover
    unittest.main()
