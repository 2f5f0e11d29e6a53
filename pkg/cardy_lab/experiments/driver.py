from __future__ import annotations
import csv
import dataclasses
import os
import time
from typing import Callable

from cardy_lab.config import DomainConfig, ExperimentConfig
from cardy_lab.experiments.arms import run_arm_exponent, run_half_annulus, run_halfplane_onearm
from cardy_lab.experiments.convergence import run_crossing_convergence, run_observable_convergence
from cardy_lab.lattice.domain import discretize
from cardy_lab.logs import ExperimentLogger as _ExperimentLogger, LOGGER_NAME as _LOGGER_NAME
from cardy_lab.models.structures import Color
from cardy_lab.percolation.engine import Configuration, crossing_occurs, label_clusters, sample_configuration
from cardy_lab.results import MANIFEST_NAME, RunManifest, RunOutcome, fmt, write_csv, write_summary


logger = _ExperimentLogger(_LOGGER_NAME)
_SAMPLE_COLUMNS = ("i", "j", "x", "y", "open", "arc")


@dataclasses.dataclass(frozen=True)
class OutputPaths:
    directory: str
    csv: str
    summary: str
    manifest: str

    @staticmethod
    def of(config: ExperimentConfig) -> OutputPaths:
        directory = config.output
        return OutputPaths(
            directory,
            os.path.join(directory, f"{config.experiment}.csv"),
            os.path.join(directory, f"{config.experiment}_summary.json"),
            os.path.join(directory, MANIFEST_NAME),
        )


def _observable(config: ExperimentConfig, manifest: RunManifest) -> RunOutcome:
    return run_observable_convergence(config, manifest, OutputPaths.of(config).directory)


EXPERIMENTS: dict[str, Callable[[ExperimentConfig, RunManifest], RunOutcome]] = {
    "crossing": run_crossing_convergence,
    "observable": _observable,
    "arm": run_arm_exponent,
    "onearm": run_halfplane_onearm,
    "half_annulus": run_half_annulus,
}


def run_experiment(config: ExperimentConfig, manifest: RunManifest | None = None) -> RunOutcome:
    """Run the experiment of the config and write its CSV, summary and manifest.

    Points already completed in `manifest` are taken from it. The files are written even
    when the outcome carries an error found after the points were measured.
    """
    paths = OutputPaths.of(config)
    os.makedirs(paths.directory, exist_ok=True)
    if manifest is None:
        manifest = RunManifest(paths.manifest, config)
        manifest.save()
    context = config.experiment
    logger.info(f"Running with seed {config.seed} and {config.workers} workers into {paths.directory}.", context)
    start = time.perf_counter()
    outcome = EXPERIMENTS[config.experiment](config, manifest)
    wall_time = time.perf_counter() - start

    write_csv(paths.csv, outcome.points)
    write_summary(paths.summary, config, outcome.summary(), wall_time)
    manifest.add_output(paths.csv)
    manifest.add_output(paths.summary)
    if outcome.error is None:
        manifest.finish("complete")
    else:
        manifest.finish(f"failed: {type(outcome.error).__name__}")
    logger.info(f"Finished in {wall_time:.1f} s, results in {paths.csv}.", context)
    return outcome


def resume_experiment(manifest_path: str, config: ExperimentConfig | None = None) -> RunOutcome:
    """Continue a run from its manifest; completed points are not recomputed."""
    manifest = RunManifest.load(manifest_path, config)
    logger.info(f"Resuming with {len(manifest.completed_keys())} completed points.", manifest.config.experiment)
    return run_experiment(manifest.config, manifest)


def sample_domain(
    domain: DomainConfig, mesh: float, seed: int, trial: int, path: str | None = None
) -> tuple[Configuration, dict]:
    """One critical configuration of the discretized domain, optionally written as CSV."""
    dd = discretize(domain.to_spec(), mesh)
    cfg = sample_configuration(dd, seed, trial)
    labeling = label_clusters(cfg, Color.OPEN)
    crossings = {
        f"{a}-{b}": crossing_occurs(cfg, a, b, labeling=labeling)
        for a in range(dd.n_arcs)
        for b in range(a + 1, dd.n_arcs)
    }
    report = {
        "sites": dd.n_sites,
        "open": int(cfg.colors.sum()),
        "open_clusters": labeling.n_clusters,
        "crossings": crossings,
    }
    if path is not None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(_SAMPLE_COLUMNS)
            for s in range(dd.n_sites):
                z = dd.positions[s]
                writer.writerow(
                    [int(dd.i[s]), int(dd.j[s]), fmt(z.real), fmt(z.imag), int(cfg.colors[s]), int(dd.arc_labels[s])]
                )
    return cfg, report
