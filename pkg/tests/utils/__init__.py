import json
import os
import tempfile


QUIET_LOGGING = {
    "console": {"level": "warning", "use": False},
    "file": {"level": "debug", "use": False},
}


def crossing_config(output: str, **fields) -> dict:
    config = {
        "experiment": "crossing",
        "trials": 100,
        "seed": 7,
        "workers": 1,
        "output": output,
        "domain": {"kind": "rectangle", "aspect": 1.0},
        "deltas": [0.25, 0.2, 0.125, 0.1],
        "logging": QUIET_LOGGING,
    }
    config.update(fields)
    return config


def triangle_config(output: str, **fields) -> dict:
    config = {
        "experiment": "observable",
        "trials": 100,
        "seed": 3,
        "workers": 1,
        "output": output,
        "domain": {"kind": "equilateral_triangle"},
        "deltas": [0.25, 0.2, 0.125],
        "logging": QUIET_LOGGING,
    }
    config.update(fields)
    return config


def write_config(directory: str, config: dict, name: str = "config.json") -> str:
    path = os.path.join(directory, name)
    with open(path, "w") as f:
        json.dump(config, f, indent=4)
    return path


class TemporaryDirectoryMixin:
    """Fresh temporary directory per test, available as `self.directory`."""

    def setUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.directory = self._tmp.name

    def tearDown(self) -> None:
        self._tmp.cleanup()
