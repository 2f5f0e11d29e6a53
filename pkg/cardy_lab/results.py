"""Result files of an experiment run: one CSV of scale points, a JSON summary and the
run manifest that makes a run resumable."""

from __future__ import annotations
import csv
import dataclasses
import json
import os
from typing import Any

from cardy_lab import __version__
from cardy_lab.config import ExperimentConfig, config_hash, echo
from cardy_lab.logs import LabLogger as _LabLogger, LOGGER_NAME as _LOGGER_NAME
from cardy_lab.models.exceptions import ManifestMismatch, ParseError
from cardy_lab.models.structures import FitResult


logger = _LabLogger(_LOGGER_NAME)
CSV_COLUMNS = ("scale", "estimate", "stderr", "trials", "seed", "first_trial")
MANIFEST_NAME = "manifest.json"


def fmt(value: float) -> str:
    """Decimal text with 17 significant digits, exact for doubles."""
    return format(float(value), ".17g")


@dataclasses.dataclass(frozen=True)
class PointResult:
    scale: float
    estimate: float
    stderr: float
    trials: int
    seed: int
    first_trial: int = 0
    extra: dict[str, Any] = dataclasses.field(default_factory=dict)

    def row(self) -> list[str]:
        return [fmt(self.scale), fmt(self.estimate), fmt(self.stderr), str(self.trials), str(self.seed),
                str(self.first_trial)]

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    @staticmethod
    def from_dict(data: dict) -> PointResult:
        return PointResult(**data)


def write_csv(path: str, points: list[PointResult]) -> None:
    """Rows in increasing scale order."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for point in sorted(points, key=lambda p: p.scale):
            writer.writerow(point.row())


def read_csv(path: str) -> list[PointResult]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ParseError(f"{path}: line 1: expected the header {','.join(CSV_COLUMNS)}.")
    points = []
    for line, row in enumerate(rows[1:], start=2):
        try:
            points.append(
                PointResult(float(row[0]), float(row[1]), float(row[2]), int(row[3]), int(row[4]), int(row[5]))
            )
        except (ValueError, IndexError) as e:
            raise ParseError(f"{path}: line {line}: {e}") from None
    return points


def write_summary(path: str, config: ExperimentConfig, summary: dict, wall_time: float) -> None:
    data = dict(summary)
    data["config"] = json.loads(echo(config))
    data["wall_time"] = wall_time
    data["version"] = __version__
    with open(path, "w") as f:
        json.dump(data, f, indent=4, sort_keys=True, default=_json_default)
        f.write("\n")


def _json_default(value: Any) -> Any:
    if isinstance(value, complex):
        return [value.real, value.imag]
    if hasattr(value, "item"):
        return value.item()
    raise TypeError(f"Value of type {type(value).__name__} is not serializable.")


class RunManifest:
    """Provenance and progress of a run, saved after every completed point.

    A resumed run reuses the stored results of completed points and refuses to continue
    when the configuration changed.
    """

    def __init__(self, path: str, config: ExperimentConfig) -> None:
        self._path = path
        self._config = config
        self._hash = config_hash(config)
        self._outputs: list[str] = []
        self._points: dict[str, PointResult] = dict()
        self._status = "running"

    @property
    def path(self) -> str:
        return self._path

    @property
    def config(self) -> ExperimentConfig:
        return self._config

    @property
    def config_hash(self) -> str:
        return self._hash

    @property
    def status(self) -> str:
        return self._status

    @property
    def outputs(self) -> list[str]:
        return list(self._outputs)

    def completed(self, key: str) -> PointResult | None:
        return self._points.get(key)

    def completed_keys(self) -> list[str]:
        return sorted(self._points)

    def record(self, key: str, point: PointResult) -> None:
        self._points[key] = point
        self.save()

    def add_output(self, path: str) -> None:
        if path not in self._outputs:
            self._outputs.append(path)

    def finish(self, status: str = "complete") -> None:
        self._status = status
        self.save()

    def as_dict(self) -> dict:
        return {
            "config_hash": self._hash,
            "seed": self._config.seed,
            "version": __version__,
            "config": json.loads(echo(self._config)),
            "outputs": self._outputs,
            "status": self._status,
            "points": {key: point.as_dict() for key, point in sorted(self._points.items())},
        }

    def save(self) -> None:
        directory = os.path.dirname(self._path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        temporary = self._path + ".tmp"
        with open(temporary, "w") as f:
            json.dump(self.as_dict(), f, indent=4, default=_json_default)
            f.write("\n")
        os.replace(temporary, self._path)

    @staticmethod
    def load(path: str, config: ExperimentConfig | None = None) -> RunManifest:
        """Read a manifest; with `config` given, its hash must match the stored one."""
        try:
            with open(path) as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from None
        stored = ExperimentConfig.model_validate(data["config"])
        if config is not None and config_hash(config) != data["config_hash"]:
            raise ManifestMismatch(
                f"Configuration hash {config_hash(config)[:12]} does not match the manifest's "
                f"{data['config_hash'][:12]}."
            )
        if config_hash(stored) != data["config_hash"]:
            raise ManifestMismatch("Manifest configuration does not match its stored hash.")
        manifest = RunManifest(path, config if config is not None else stored)
        manifest._outputs = list(data.get("outputs", []))
        manifest._status = data.get("status", "running")
        manifest._points = {key: PointResult.from_dict(value) for key, value in data.get("points", {}).items()}
        logger.info(f"Loaded manifest {path} with {len(manifest._points)} completed points.")
        return manifest


@dataclasses.dataclass
class RunOutcome:
    """Points, fit and report of one experiment run.

    `error` holds a failure found after the points were measured (a statistical floor or
    degenerate fit points); the result files are still written in that case.
    """

    experiment: str
    points: list[PointResult]
    fit: FitResult | None = None
    report: dict[str, Any] = dataclasses.field(default_factory=dict)
    error: Exception | None = None

    def result(self) -> FitResult:
        if self.error is not None:
            raise self.error
        if self.fit is None:
            raise ValueError(f"The {self.experiment} experiment does not produce a fit.")
        return self.fit

    def summary(self) -> dict[str, Any]:
        data: dict[str, Any] = {"experiment": self.experiment, "points": len(self.points), "report": self.report}
        if self.fit is not None:
            data.update(self.fit.as_dict())
            data["exponent"] = self.fit.exponent
        if self.error is not None:
            data["error"] = f"{type(self.error).__name__}: {self.error}"
        return data
