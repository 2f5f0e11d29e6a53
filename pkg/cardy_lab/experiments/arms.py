"""Arm events in annular sectors and the half-plane one-arm probability.

Arm experiments run at mesh 1 and grow the outer radius. The one-arm origin is the site
(0, 0) on the flat side of the half-plane; S_R is the set of sites having a lattice
neighbor beyond radius R.
"""

from __future__ import annotations
import dataclasses
import math

import numpy as np

from cardy_lab.config import ExperimentConfig
from cardy_lab.conformal.maps import half_annulus_corner_value, half_annulus_map
from cardy_lab.conformal.special import SMALL_ANNULUS_LIMIT
from cardy_lab.experiments.estimation import Estimate, estimate_flood, estimate_probability, measure_point
from cardy_lab.experiments.fitting import fit_power_law
from cardy_lab.lattice.domain import annular_sector_domain, discretize
from cardy_lab.lattice.shapes import DomainSpec
from cardy_lab.logs import ExperimentLogger as _ExperimentLogger, LOGGER_NAME as _LOGGER_NAME
from cardy_lab.models.exceptions import DegeneratePoints, ZeroCount
from cardy_lab.models.structures import ArmSpec, Color, SiteCoord
from cardy_lab.percolation.engine import ClusterFlood, arm_event_occurs, outer_touch_sites, sector_geometry
from cardy_lab.results import PointResult, RunManifest, RunOutcome, fmt
from cardy_lab.workers.pool import point_seed


logger = _ExperimentLogger(_LOGGER_NAME)
# seed indices of the auxiliary points of the one-arm run
_UPPER_SEEDS = 1000
_LOWER_SEEDS = 2000
_GLUE_SEEDS = 3000
_ORIGIN_SEED = 4000
ENVELOPE_A1 = 1.0


def predicted_arm_exponent(k: int, angle: float = math.pi) -> float:
    """k(k+1)π/(6θ): 1/3, 1 and 2 for one to three arms in the half-plane."""
    return k * (k + 1) * math.pi / (6 * angle)


def _point(scale: float, estimate: Estimate, **extra) -> PointResult:
    return PointResult(
        scale, estimate.probability, estimate.stderr, estimate.trials, estimate.seed, estimate.first_trial, extra
    )


def _checked(point: PointResult, context: str) -> PointResult:
    """The point flagged as dropped when its event was never observed."""
    if point.estimate > 0:
        return point
    e = ZeroCount(f"Event never observed in {point.trials} trials at scale {point.scale:g}; point dropped.")
    logger.log_on_exception(e, context)
    return dataclasses.replace(point, extra={**point.extra, "dropped": True})


def _fit_points(outcome: RunOutcome, exclude_transient: bool, context: str) -> None:
    kept = [(p.scale, p.estimate, p.stderr) for p in outcome.points if not p.extra.get("dropped")]
    try:
        outcome.fit = fit_power_law(kept, exclude_transient, context)
    except DegeneratePoints as e:
        logger.log_on_exception(e, context)
        outcome.error = e


def arm_probability(
    arm: ArmSpec, trials: int, seed: int, workers: int = 1, context: str = ""
) -> tuple[Estimate, int]:
    """Estimate of P(C^k_θ(r, R)) on the closed annular sector at mesh 1, with the site count."""
    dd = annular_sector_domain(1.0, arm.inner_radius, arm.outer_radius, arm.angle, arm.center, arm.start_angle)
    estimate = estimate_probability(dd, lambda cfg: arm_event_occurs(cfg, arm), trials, seed, workers=workers,
                                    context=context)
    return estimate, dd.n_sites


def run_arm_exponent(config: ExperimentConfig, manifest: RunManifest | None = None) -> RunOutcome:
    arm = config.arm
    context = f"arm k={arm.k} θ={arm.angle:.6g}"
    points = []
    for index, radius in enumerate(config.radii):
        key = f"arm R={fmt(radius)}"
        spec = ArmSpec(arm.inner_radius, radius, arm.k, arm.angle, start_color=arm.color())

        def compute() -> PointResult:
            seed = point_seed(config.seed, index)
            estimate, sites = arm_probability(spec, config.trials, seed, config.workers, key)
            return _point(radius, estimate, sites=sites)

        points.append(_checked(measure_point(manifest, key, compute), key))

    outcome = RunOutcome(
        "arm",
        points,
        report={
            "k": arm.k,
            "angle": arm.angle,
            "inner_radius": arm.inner_radius,
            "predicted_exponent": predicted_arm_exponent(arm.k, arm.angle),
        },
    )
    _fit_points(outcome, config.fit.exclude_transient, context)
    return outcome


# half-plane one-arm


def onearm_probability(radius: float, trials: int, seed: int, workers: int = 1, context: str = "") -> Estimate:
    """P(0 ↔ S_R) in the upper half-plane at mesh 1."""
    dd = annular_sector_domain(1.0, 0.0, radius, math.pi)
    origin = np.zeros(dd.n_sites, dtype=bool)
    origin[dd.site_index(SiteCoord(0, 0))] = True
    flood = ClusterFlood(dd, origin, outer_touch_sites(dd, radius))
    return estimate_flood(flood, trials, seed, workers=workers, context=context)


def half_annulus_crossing(
    inner: float, outer: float, trials: int, seed: int, workers: int = 1, context: str = ""
) -> Estimate:
    """P(S_r ↔ S_R): an open crossing of the half-annulus from radius r to radius R."""
    dd = annular_sector_domain(1.0, inner, outer, math.pi)
    arm = ArmSpec(inner, outer, 1, math.pi, start_color=Color.OPEN)
    _, touches_inner, touches_outer, _ = sector_geometry(dd, arm)
    flood = ClusterFlood(dd, touches_inner, touches_outer)
    return estimate_flood(flood, trials, seed, workers=workers, context=context)


def arch_crossing(radius: float, trials: int, seed: int, workers: int = 1, context: str = "") -> Estimate:
    """P(E): an open path in the half-annulus of radii R and 2R joining its two flat sides."""
    dd = discretize(DomainSpec.half_annulus(radius, 2 * radius, marks=4), 1.0)
    flood = ClusterFlood(dd, dd.touch[:, 1], dd.touch[:, 3])
    return estimate_flood(flood, trials, seed, workers=workers, context=context)


def multiscale_schedule(max_radius: float, c: float, r0: float | None = None) -> list[float]:
    """R_k = R₀^{α^k} with α = 1/(1 − 3c), kept while 2R_k ≤ max_radius.

    R₀ defaults to exp(√(log log max_radius)).
    """
    if not 0 < c < 1 / 3:
        raise ValueError("The multiscale exponent c must lie in (0, 1/3).")
    if r0 is None:
        if max_radius <= math.e:
            raise ValueError("The largest radius must exceed e for the default R₀.")
        r0 = math.exp(math.sqrt(math.log(math.log(max_radius))))
    if r0 <= 1:
        raise ValueError("R₀ must exceed 1.")
    alpha = 1 / (1 - 3 * c)
    schedule = [r0]
    while True:
        following = r0 ** (alpha ** len(schedule))
        if 2 * following > max_radius:
            return schedule
        schedule.append(following)


def envelope(radius: float, levels: int, r0: float, a2: float = SMALL_ANNULUS_LIMIT) -> float:
    """(a₁/10 + a₂)ⁿ (R/R₀)^{−1/3}."""
    return (ENVELOPE_A1 / 10 + a2) ** levels * (radius / r0) ** (-1 / 3)


def _measured(manifest, key: str, scale: float, estimator) -> PointResult:
    return measure_point(manifest, key, lambda: _point(scale, estimator()))


def run_halfplane_onearm(config: ExperimentConfig, manifest: RunManifest | None = None) -> RunOutcome:
    """P(0 ↔ S_R) for every radius of the config, fitted with a power of R.

    With multiscale enabled, the half-annulus crossings along the schedule give the upper
    product P(0 ↔ S_{R₀})∏P(S_{R_k} ↔ S_{R_{k+1}}), and with R′_k = 2R_k the lower product
    P(0 ↔ S_{R′₀})∏P(S_{R_k} ↔ S_{R′_{k+1}})∏P(E_k) bounds P(0 ↔ S_{R′_n}) from below.
    """
    context = "onearm"
    trials, workers = config.trials, config.workers
    points = []
    for index, radius in enumerate(config.radii):
        key = f"onearm R={fmt(radius)}"
        seed = point_seed(config.seed, index)
        point = _measured(manifest, key, radius, lambda: onearm_probability(radius, trials, seed, workers, key))
        points.append(_checked(point, key))

    report: dict = {"predicted_exponent": predicted_arm_exponent(1, math.pi)}
    if config.multiscale.enabled:
        report["multiscale"] = _multiscale_report(config, manifest, points)

    outcome = RunOutcome("onearm", points, report=report)
    _fit_points(outcome, config.fit.exclude_transient, context)
    return outcome


def _multiscale_report(config: ExperimentConfig, manifest: RunManifest | None, direct: list[PointResult]) -> dict:
    trials, workers = config.trials, config.workers
    settings = config.multiscale
    schedule = multiscale_schedule(max(config.radii), settings.c, settings.r0)
    context = "onearm multiscale"
    logger.info(f"Schedule R_k: {', '.join(f'{r:.4g}' for r in schedule)}.", context)

    def measure(key: str, index: int, scale: float, estimator) -> PointResult:
        seed = point_seed(config.seed, index)
        return _measured(manifest, key, scale, lambda: estimator(seed))

    r0 = schedule[0]
    origin = measure(
        f"onearm R={fmt(r0)} origin", _ORIGIN_SEED, r0, lambda s: onearm_probability(r0, trials, s, workers, context)
    )
    origin_doubled = measure(
        f"onearm R={fmt(2 * r0)} origin",
        _ORIGIN_SEED + 1,
        2 * r0,
        lambda s: onearm_probability(2 * r0, trials, s, workers, context),
    )
    crossings = []
    for k, (inner, outer) in enumerate(zip(schedule, schedule[1:])):
        crossings.append(
            measure(
                f"half-annulus {fmt(inner)}-{fmt(outer)}",
                _UPPER_SEEDS + k,
                outer,
                lambda s: half_annulus_crossing(inner, outer, trials, s, workers, context),
            )
        )
    glues = []
    for k, (inner, following) in enumerate(zip(schedule, schedule[1:])):
        glues.append(
            measure(
                f"half-annulus {fmt(inner)}-{fmt(2 * following)}",
                _GLUE_SEEDS + k,
                2 * following,
                lambda s: half_annulus_crossing(inner, 2 * following, trials, s, workers, context),
            )
        )
    arches = []
    for k, radius in enumerate(schedule):
        arches.append(
            measure(
                f"arch {fmt(radius)}-{fmt(2 * radius)}",
                _LOWER_SEEDS + k,
                radius,
                lambda s: arch_crossing(radius, trials, s, workers, context),
            )
        )

    upper = []
    for point in direct:
        levels = sum(1 for r in schedule[1:] if r <= point.scale)
        if point.scale < r0:
            product = 1.0
        else:
            product = origin.estimate * float(np.prod([c.estimate for c in crossings[:levels]]))
        upper.append(
            {
                "radius": point.scale,
                "levels": levels,
                "upper_product": product,
                "direct": point.estimate,
                "direct_stderr": point.stderr,
                "dominates": product >= point.estimate - 3 * point.stderr,
            }
        )
    lower = []
    for n, radius in enumerate(schedule):
        product = origin_doubled.estimate
        product *= float(np.prod([g.estimate for g in glues[:n]]))
        product *= float(np.prod([a.estimate for a in arches[: n + 1]]))
        lower.append(
            {
                "radius": 2 * radius,
                "levels": n,
                "lower_product": product,
                "envelope": envelope(2 * radius, n, r0),
            }
        )
    return {
        "c": settings.c,
        "alpha": 1 / (1 - 3 * settings.c),
        "schedule": schedule,
        "origin": origin.estimate,
        "crossings": [c.estimate for c in crossings],
        "arches": [a.estimate for a in arches],
        "upper": upper,
        "lower": lower,
        "product_dominates": all(row["dominates"] for row in upper),
    }


# half-annulus crossings against the conformal map


def run_half_annulus(config: ExperimentConfig, manifest: RunManifest | None = None) -> RunOutcome:
    """P(S_r ↔ S_R) with r = R/ratio for every radius, next to φ_{r,R}(r)."""
    context = f"half-annulus ratio={config.ratio:g}"
    points = []
    for index, radius in enumerate(config.radii):
        key = f"half-annulus R={fmt(radius)}"
        inner = radius / config.ratio
        seed = point_seed(config.seed, index)
        point = _measured(
            manifest,
            key,
            radius,
            lambda: half_annulus_crossing(inner, radius, config.trials, seed, config.workers, key),
        )
        limit = complex(half_annulus_map(inner, radius, inner)).real
        points.append(dataclasses.replace(point, extra={**point.extra, "limit": limit,
                                                        "deviation": abs(point.estimate - limit)}))

    limit_theta = half_annulus_corner_value(1 / config.ratio)
    logger.info(f"Corner value φ_(r,R)(r) = {limit_theta:.10f} at ratio {config.ratio:g}.", context)
    return RunOutcome(
        "half_annulus",
        points,
        report={
            "ratio": config.ratio,
            "limit": limit_theta,
            "max_deviation": max(p.extra["deviation"] for p in points),
        },
    )
