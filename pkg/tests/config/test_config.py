import json
import os
import unittest

from cardy_lab.config import (
    InvalidConfiguration,
    config_hash,
    echo,
    load_config,
    parse_config,
    with_overrides,
)
from cardy_lab.lattice.shapes import DomainKind
from cardy_lab.models.exceptions import ConfigValidationError, ParseError
from cardy_lab.models.structures import Color
from tests.utils import TemporaryDirectoryMixin, crossing_config, write_config


class Test_Parsing_Config(unittest.TestCase):

    def setUp(self):
        self.data = crossing_config("./results")

    def test_minimal_config_is_accepted(self):
        config = parse_config(json.dumps({"experiment": "onearm", "trials": 100, "radii": [4, 8, 16]}))
        self.assertEqual(config.seed, 0)
        self.assertEqual(config.workers, 1)
        self.assertFalse(config.multiscale.enabled)

    def test_echo_of_parsed_echo_is_identical(self):
        config = parse_config(json.dumps(self.data))
        self.assertEqual(echo(parse_config(echo(config))), echo(config))

    def test_too_few_trials_name_the_invariant(self):
        self.data["trials"] = 0
        with self.assertRaises(ConfigValidationError) as cm:
            parse_config(json.dumps(self.data))
        self.assertIn("trials ≥ 100", str(cm.exception))

    def test_unknown_key_is_named(self):
        self.data["lattice"] = "square"
        with self.assertRaises(ParseError) as cm:
            parse_config(json.dumps(self.data))
        self.assertIn("lattice", str(cm.exception))

    def test_unknown_nested_key_is_named_with_its_path(self):
        self.data["domain"]["lattice"] = "square"
        with self.assertRaises(ParseError) as cm:
            parse_config(json.dumps(self.data))
        self.assertIn("domain.lattice", str(cm.exception))

    def test_unknown_key_reports_its_line(self):
        text = '{\n  "experiment": "onearm",\n  "trials": 100,\n  "radii": [4, 8],\n  "lattice": "square"\n}'
        with self.assertRaises(ParseError) as cm:
            parse_config(text)
        self.assertIn("lattice at line 5", str(cm.exception))

    def test_unknown_nested_key_reports_its_line(self):
        text = (
            '{\n  "experiment": "onearm",\n  "trials": 100,\n  "radii": [4, 8],\n'
            '  "multiscale": {\n    "enabled": false,\n    "lattice": "square"\n  }\n}'
        )
        with self.assertRaises(ParseError) as cm:
            parse_config(text)
        self.assertIn("multiscale.lattice at line 7", str(cm.exception))

    def test_malformed_text_reports_the_line(self):
        with self.assertRaises(ParseError) as cm:
            parse_config('{\n  "experiment": "crossing",\n  "trials" 100\n}')
        self.assertIn("line 3", str(cm.exception))

    def test_config_must_be_an_object(self):
        with self.assertRaises(ParseError):
            parse_config("[1, 2, 3]")

    def test_seed_out_of_range_is_rejected(self):
        self.data["seed"] = 2**64
        with self.assertRaises(ConfigValidationError):
            parse_config(json.dumps(self.data))

    def test_crossing_needs_four_marked_points(self):
        self.data["domain"] = {"kind": "equilateral_triangle"}
        with self.assertRaises(ConfigValidationError):
            parse_config(json.dumps(self.data))

    def test_observable_needs_three_marked_points(self):
        self.data["experiment"] = "observable"
        with self.assertRaises(ConfigValidationError):
            parse_config(json.dumps(self.data))

    def test_scales_must_be_monotone(self):
        self.data["deltas"] = [0.25, 0.1, 0.2, 0.05]
        with self.assertRaises(ConfigValidationError):
            parse_config(json.dumps(self.data))

    def test_half_annulus_radii_must_be_ordered(self):
        data = {
            "experiment": "observable",
            "trials": 100,
            "domain": {"kind": "half_annulus", "size": 1.0, "inner_radius": 2.0},
            "deltas": [0.1, 0.05, 0.025],
        }
        with self.assertRaises(ConfigValidationError):
            parse_config(json.dumps(data))

    def test_marked_points_must_be_ordered(self):
        self.data["domain"]["marked_points"] = [0.0, 0.5, 0.25, 0.75]
        with self.assertRaises(ConfigValidationError):
            parse_config(json.dumps(self.data))

    def test_arm_experiment_needs_an_arm_section(self):
        data = {"experiment": "arm", "trials": 100, "radii": [8, 16, 32]}
        with self.assertRaises(ConfigValidationError):
            parse_config(json.dumps(data))

    def test_arm_section_is_converted(self):
        data = {
            "experiment": "arm",
            "trials": 100,
            "radii": [8, 16, 32],
            "arm": {"k": 2, "start_color": "closed"},
        }
        config = parse_config(json.dumps(data))
        self.assertEqual(config.arm.color(), Color.CLOSED)
        self.assertEqual(config.arm.inner_radius, 2.0)

    def test_logging_level_is_case_insensitive(self):
        config = parse_config(json.dumps(self.data))
        self.assertEqual(config.logging.console.level, "WARNING")


class Test_Domain_Config(unittest.TestCase):

    def test_rectangle_config_gives_a_rectangle_with_four_marks(self):
        config = parse_config(json.dumps(crossing_config("./results")))
        spec = config.domain.to_spec()
        self.assertEqual(spec.kind, DomainKind.RECTANGLE)
        self.assertEqual(len(spec.boundary_parameters()), 4)

    def test_rectangle_midpoints(self):
        data = crossing_config("./results")
        data["domain"]["midpoints"] = True
        spec = parse_config(json.dumps(data)).domain.to_spec()
        self.assertAlmostEqual(spec.boundary_parameters()[0], 0.125)


class Test_Config_Hash(unittest.TestCase):

    def setUp(self):
        self.config = parse_config(json.dumps(crossing_config("./results")))

    def test_hash_ignores_workers_output_and_logging(self):
        other = with_overrides(self.config, workers=4, output="./elsewhere")
        self.assertEqual(config_hash(other), config_hash(self.config))

    def test_hash_depends_on_the_seed(self):
        other = with_overrides(self.config, seed=8)
        self.assertNotEqual(config_hash(other), config_hash(self.config))


class Test_Overrides(unittest.TestCase):

    def setUp(self):
        self.config = parse_config(json.dumps(crossing_config("./results")))

    def test_none_values_keep_the_config(self):
        self.assertEqual(echo(with_overrides(self.config, seed=None)), echo(self.config))

    def test_overrides_are_validated(self):
        with self.assertRaises(ConfigValidationError):
            with_overrides(self.config, trials=5)
        with self.assertRaises(ConfigValidationError):
            with_overrides(self.config, experiment="arm")


class Test_Loading_Config(TemporaryDirectoryMixin, unittest.TestCase):

    def test_config_file_is_loaded(self):
        path = write_config(self.directory, crossing_config(self.directory))
        self.assertEqual(load_config(path).experiment, "crossing")

    def test_missing_file_raises_invalid_configuration(self):
        with self.assertRaises(InvalidConfiguration):
            load_config(os.path.join(self.directory, "missing.json"))

    def test_invalid_content_raises_invalid_configuration(self):
        path = write_config(self.directory, crossing_config(self.directory, trials=1))
        with self.assertRaises(InvalidConfiguration):
            load_config(path)

    def test_shipped_configs_are_valid(self):
        root = os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(__file__))), "config")
        paths = [os.path.join(root, "config.json")]
        experiments = os.path.join(root, "experiments")
        paths += [os.path.join(experiments, name) for name in sorted(os.listdir(experiments))]
        for path in paths:
            with self.subTest(path=path):
                load_config(path)


if __name__ == "__main__":  # pragma: no cover
    unittest.main()
