"""Convergence of the crossing probability and of the observable as the mesh shrinks."""

from __future__ import annotations
import os

import numpy as np

from cardy_lab.config import ExperimentConfig
from cardy_lab.conformal.maps import carleson_probability, cross_ratio, crossing_limit, triangle_map
from cardy_lab.experiments.estimation import estimate_probability, measure_point
from cardy_lab.experiments.fitting import check_statistical_floor, fit_power_law
from cardy_lab.lattice.domain import discretize
from cardy_lab.lattice.shapes import predicted_rate_ceiling
from cardy_lab.logs import ExperimentLogger as _ExperimentLogger, LOGGER_NAME as _LOGGER_NAME
from cardy_lab.models.exceptions import DegeneratePoints, StatisticalFloor
from cardy_lab.observable.field import boundary_report, estimate_fields, g_field, modify_boundary, sup_deviation
from cardy_lab.percolation.engine import crossing_occurs
from cardy_lab.results import PointResult, RunManifest, RunOutcome, fmt
from cardy_lab.workers.pool import point_seed


logger = _ExperimentLogger(_LOGGER_NAME)


def _fit_deviations(outcome: RunOutcome, deviations: list[float], config: ExperimentConfig, context: str) -> None:
    stderrs = [p.stderr for p in outcome.points]
    try:
        check_statistical_floor(deviations, stderrs, context)
        triples = [(p.scale, d, p.stderr) for p, d in zip(outcome.points, deviations)]
        outcome.fit = fit_power_law(triples, config.fit.exclude_transient, context)
    except (StatisticalFloor, DegeneratePoints) as e:
        logger.log_on_exception(e, context)
        outcome.error = e


def run_crossing_convergence(config: ExperimentConfig, manifest: RunManifest | None = None) -> RunOutcome:
    """P^δ(AB ↔ CD) at every mesh of the config, fitted as |P^δ − limit| ≈ C·δ^c."""
    spec = config.domain.to_spec()
    limit = crossing_limit(spec)
    context = f"crossing {spec.kind.value}"
    logger.info(f"Crossing limit {limit:.12f} at cross-ratio {cross_ratio(spec):.12f}.", context)

    points = []
    for index, delta in enumerate(config.deltas):
        key = f"crossing delta={fmt(delta)}"

        def compute() -> PointResult:
            dd = discretize(spec, delta)
            seed = point_seed(config.seed, index)
            estimate = estimate_probability(
                dd, lambda cfg: crossing_occurs(cfg, 0, 2), config.trials, seed, workers=config.workers, context=key
            )
            return PointResult(
                delta, estimate.probability, estimate.stderr, estimate.trials, seed, 0, {"sites": dd.n_sites}
            )

        points.append(measure_point(manifest, key, compute))

    deviations = [abs(p.estimate - limit) for p in points]
    outcome = RunOutcome(
        "crossing",
        points,
        report={
            "limit": limit,
            "cross_ratio": cross_ratio(spec),
            "carleson_limit": carleson_probability(spec),
            "predicted_rate_ceiling": predicted_rate_ceiling(spec),
            "deviations": {fmt(p.scale): d for p, d in zip(points, deviations)},
        },
    )
    _fit_deviations(outcome, deviations, config, context)
    return outcome


def run_observable_convergence(
    config: ExperimentConfig, manifest: RunManifest | None = None, field_directory: str | None = None
) -> RunOutcome:
    """sup |G̃^δ − φ| at every mesh of the config, fitted as C·δ^c.

    The point estimate is the sup deviation and its error the largest standard error of
    G^δ over the dual vertices. With `field_directory`, the counters of each mesh are kept
    as a CSV file.
    """
    spec = config.domain.to_spec()
    phi = triangle_map(spec)
    context = f"observable {spec.kind.value}"
    logger.info(f"Triangle map stages: {', '.join(phi.describe())}.", context)

    points = []
    for index, delta in enumerate(config.deltas):
        key = f"observable delta={fmt(delta)}"

        def compute() -> PointResult:
            dd = discretize(spec, delta)
            seed = point_seed(config.seed, index)
            field = estimate_fields(dd, config.trials, seed, workers=config.workers)
            values = modify_boundary(field, g_field(field))
            deviation = sup_deviation(dd, values, phi)
            h = field.estimates
            stderr = float(np.max(np.sqrt(np.sum(h * (1 - h), axis=1) / field.trials)))
            boundary = boundary_report(field)
            if field_directory is not None:
                path = os.path.join(field_directory, f"field_delta={fmt(delta)}.csv")
                field.to_csv(path)
                if manifest is not None:
                    manifest.add_output(path)
            return PointResult(
                delta,
                deviation,
                stderr,
                field.trials,
                seed,
                0,
                {
                    "faces": dd.n_faces,
                    "max_sum_deviation": boundary.max_sum_deviation,
                    "max_far_arc": list(boundary.max_far_arc),
                    "mean_sum_deviation": boundary.mean_sum_deviation,
                    "mean_far_arc": list(boundary.mean_far_arc),
                },
            )

        points.append(measure_point(manifest, key, compute))

    ordered = sorted(points, key=lambda p: p.scale)
    outcome = RunOutcome(
        "observable",
        points,
        report={
            "map_stages": phi.describe(),
            "marked_error": phi.marked_error(),
            "decreasing": all(a.estimate < b.estimate for a, b in zip(ordered, ordered[1:])),
        },
    )
    _fit_deviations(outcome, [p.estimate for p in points], config, context)
    return outcome
