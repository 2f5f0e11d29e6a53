"""Exactness checks: fast detectors against exhaustive oracles, exact identities of the
critical measure on tiny domains, and numerical checks of the conformal maps and the
elliptic kernel."""

from __future__ import annotations
import dataclasses
import itertools
import math
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from cardy_lab.conformal.elliptic import EllipticKernel
from cardy_lab.conformal.maps import (
    MAP_TOLERANCE,
    cauchy_riemann_residual,
    carleson_probability,
    cross_ratio,
    crossing_limit,
    half_annulus_corner_value,
    half_annulus_descriptor,
    rectangle_cross_ratio,
    triangle_map,
)
from cardy_lab.experiments.estimation import estimate_probability
from cardy_lab.lattice.domain import DiscreteDomain, annular_sector_domain, discretize
from cardy_lab.lattice.shapes import DomainKind, DomainSpec
from cardy_lab.logs import ExperimentLogger as _ExperimentLogger, LOGGER_NAME as _LOGGER_NAME
from cardy_lab.models.exceptions import MeshTooCoarse, WrongMarkedPointCount
from cardy_lab.models.structures import SQRT3, ArmSpec, Color
from cardy_lab.observable.interpolation import neighbor_directions
from cardy_lab.percolation.engine import (
    Configuration,
    arm_event_occurs,
    crossing_occurs,
    label_clusters,
    sample_configuration,
    separating_indicator_field,
    separating_indicator_fields,
)
from cardy_lab.percolation.exact import (
    arm_oracle,
    bfs_labels,
    configurations,
    enumerate_exact,
    same_partition,
    separating_oracle,
)
from cardy_lab.workers.pool import point_seed


logger = _ExperimentLogger(_LOGGER_NAME)
SWITCHING_SITE_LIMIT = 20
KIND_SITE_LIMIT = 13
SWITCHING_Z_LIMIT = 5.0
_REPORTED_MISMATCHES = 10
ARM_REGION = ArmSpec(1.0, 2.5, 1, math.pi)


@dataclasses.dataclass
class VerificationReport:
    name: str
    checks: int = 0
    mismatches: int = 0
    details: dict[str, Any] = dataclasses.field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.mismatches == 0

    def record(self, ok: bool, description: str) -> None:
        self.checks += 1
        if not ok:
            self.mismatches += 1
            failures = self.details.setdefault("failures", [])
            if len(failures) < _REPORTED_MISMATCHES:
                failures.append(description)

    def as_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "checks": self.checks,
            "mismatches": self.mismatches,
            "passed": self.passed,
            **self.details,
        }


# exhaustive detector checks


def symmetric_triangle() -> DiscreteDomain:
    """Triangle of side 2√3 at mesh 1: 16 sites, symmetric under the rotation by 2π/3."""
    return discretize(DomainSpec.triangle(2 * SQRT3), 1.0)


def sampled_switching_domain(mesh: float = 0.1) -> DiscreteDomain:
    """Half-disk with its three default marked points, for the sampled switching check."""
    return discretize(DomainSpec.half_disk(), mesh)


def small_domain(spec: DomainSpec, max_sites: int) -> DiscreteDomain:
    """The discretization of `spec` with the most sites, at most `max_sites`, over a scan of
    meshes from twice the domain size down to an eighth of it."""
    best = None
    for ratio in np.linspace(0.5, 8.0, 76):
        try:
            dd = discretize(spec, spec.size / ratio)
        except MeshTooCoarse:
            continue
        if dd.n_arcs == len(spec.boundary_parameters()) and dd.n_sites <= max_sites:
            if best is None or dd.n_sites > best.n_sites:
                best = dd
    if best is None:
        raise MeshTooCoarse(f"No mesh gives a {spec.kind.value} with at most {max_sites} sites.")
    return best


def kind_domains(max_sites: int = KIND_SITE_LIMIT) -> list[tuple[str, DiscreteDomain]]:
    """One small discretization of every curved or four-pointed domain kind; kinds with no
    discretization that small are left out."""
    specs = [
        ("rectangle", DomainSpec.rectangle(1.5)),
        ("half-disk", DomainSpec.half_disk()),
        ("half-annulus", DomainSpec.half_annulus(0.4, 1.0)),
        ("sector", DomainSpec.sector(math.pi / 2)),
        ("disk", DomainSpec.disk()),
    ]
    domains = []
    for name, spec in specs:
        try:
            dd = small_domain(spec, max_sites)
        except MeshTooCoarse as e:
            logger.debug(str(e), name)
            continue
        domains.append((f"{name}-{dd.n_sites}", dd))
    return domains


def enumeration_domains(max_sites: int = 18) -> list[tuple[str, DiscreteDomain]]:
    """The tiny domains of the exhaustive suite with at most `max_sites` sites."""
    domains = kind_domains(min(max_sites, KIND_SITE_LIMIT)) + [
        ("triangle-7", discretize(DomainSpec.triangle(SQRT3), 1.0)),
        ("rhombus-3x3", discretize(DomainSpec.rhombus(3, 3), 1.0)),
        (
            "rhombus-3x3-three-marks",
            discretize(DomainSpec(DomainKind.RHOMBUS, block=(3, 3), marked_points=(0.0, 0.25, 0.5)), 1.0),
        ),
        ("arm-sector", annular_sector_domain(1.0, ARM_REGION.inner_radius, ARM_REGION.outer_radius, math.pi)),
        ("triangle-16", symmetric_triangle()),
    ]
    return [(name, dd) for name, dd in domains if dd.n_sites <= max_sites]


def _oracle_crossing(cfg: Configuration, labels: np.ndarray, arc_a: int, arc_b: int) -> bool:
    dd = cfg.domain
    on_a = set(labels[dd.touch[:, arc_a] & (labels >= 0)].tolist())
    on_b = set(labels[dd.touch[:, arc_b] & (labels >= 0)].tolist())
    return bool(on_a & on_b)


def check_configuration(report: VerificationReport, name: str, number: int, cfg: Configuration) -> None:
    """Compare every fast detector with its oracle on one configuration."""
    dd = cfg.domain
    for color in Color:
        labeling = label_clusters(cfg, color)
        labels = bfs_labels(cfg, color)
        report.record(same_partition(labeling.labels, labels), f"{name} #{number}: {color.name} clusters")
        for arc_a, arc_b in itertools.combinations(range(dd.n_arcs), 2):
            fast = crossing_occurs(cfg, arc_a, arc_b, color, labeling)
            report.record(
                fast == _oracle_crossing(cfg, labels, arc_a, arc_b),
                f"{name} #{number}: {color.name} crossing {arc_a}-{arc_b}",
            )
    if dd.n_arcs == 3:
        labeling = label_clusters(cfg, Color.OPEN)
        for k in range(3):
            report.record(
                np.array_equal(separating_indicator_field(cfg, k, labeling), separating_oracle(cfg, k)),
                f"{name} #{number}: separating k={k}",
            )
    if dd.n_arcs == 0:
        for k in (1, 2, 3):
            for start in (None, Color.OPEN, Color.CLOSED):
                arm = dataclasses.replace(ARM_REGION, k=k, start_color=start)
                report.record(
                    arm_event_occurs(cfg, arm) == arm_oracle(cfg, arm),
                    f"{name} #{number}: {k} arms from {start.name if start else 'any'}",
                )


def verify_enumeration(
    max_sites: int = 18,
    stride: int = 1,
    domains: list[tuple[str, DiscreteDomain]] | None = None,
) -> VerificationReport:
    """Crossings, cluster labels, separating events and arm events against the oracles.

    Every configuration of the tiny domains is checked, or every `stride`-th one in the
    enumeration order; an odd stride still varies every site.
    """
    if stride < 1:
        raise ValueError("The stride must be at least 1.")
    report = VerificationReport("enumeration")
    domains = enumeration_domains(max_sites) if domains is None else domains
    for name, dd in domains:
        dd.prepare_faces()
        logger.info(f"Checking {-(-(1 << dd.n_sites) // stride)} configurations of {dd.n_sites} sites.", name)
        for number, cfg in enumerate(configurations(dd, max_sites)):
            if number % stride == 0:
                check_configuration(report, name, number, cfg)
    report.details["domains"] = {name: dd.n_sites for name, dd in domains}
    return report


# identities of the critical measure


def _switching_pairs(dd: DiscreteDomain) -> list[tuple[int, int, int, int]]:
    """(face, direction, neighbor in the direction, neighbor in the direction turned by 2π/3)."""
    pairs = []
    for face in range(dd.n_faces):
        neighbors = neighbor_directions(dd, face)
        for d, neighbor in sorted(neighbors.items()):
            turned = (d + 2) % 6
            if turned in neighbors:
                pairs.append((face, d, neighbor, neighbors[turned]))
    return pairs


def verify_color_switching(dd: DiscreteDomain | None = None) -> VerificationReport:
    """Exact P_{τ^k}(z, η) = P(E_{τ^k}(z + η) \\ E_{τ^k}(z)) against P_{τ^{k+1}}(z, τη).

    Every configuration is enumerated; the largest discrepancy over the dual vertices,
    directions and k is reported as a fraction. With the arcs read on the exterior ring
    the two sides agree exactly on every three-pointed domain.
    """
    dd = symmetric_triangle() if dd is None else dd
    if dd.n_arcs != 3:
        raise WrongMarkedPointCount("Color switching needs a domain with 3 marked points.")
    dd.prepare_faces()
    pairs = _switching_pairs(dd)
    faces = np.array([p[0] for p in pairs], dtype=np.int64)
    ahead = np.array([p[2] for p in pairs], dtype=np.int64)
    turned = np.array([p[3] for p in pairs], dtype=np.int64)
    straight = np.zeros((3, len(pairs)), dtype=np.int64)
    rotated = np.zeros((3, len(pairs)), dtype=np.int64)
    for cfg in configurations(dd, SWITCHING_SITE_LIMIT):
        fields = separating_indicator_fields(cfg)
        straight += fields[:, ahead] & ~fields[:, faces]
        rotated += fields[:, turned] & ~fields[:, faces]

    total = 1 << dd.n_sites
    report = VerificationReport("color switching")
    worst = Fraction(0)
    worst_at = None
    for k in range(3):
        following = (k + 1) % 3
        for index, (face, d, _, _) in enumerate(pairs):
            gap = Fraction(abs(int(straight[k, index]) - int(rotated[following, index])), total)
            report.record(gap == 0, f"face {dd.face(face)} direction {d} k={k}: {gap}")
            if gap > worst:
                worst, worst_at = gap, (face, d, k)
    report.details.update(
        {
            "sites": dd.n_sites,
            "pairs": len(pairs),
            "max_discrepancy": str(worst),
            "max_discrepancy_value": float(worst),
            "worst": None if worst_at is None else {"face": worst_at[0], "direction": worst_at[1], "k": worst_at[2]},
        }
    )
    return report


def verify_switching_sampled(
    dd: DiscreteDomain, trials: int = 4000, seed: int = 0, z_limit: float = SWITCHING_Z_LIMIT
) -> VerificationReport:
    """Color switching on a domain too large to enumerate.

    Both difference events are counted on the same sampled configurations. With n₊ trials
    where only the first holds and n₋ where only the second does, z = (n₊ − n₋)/√(n₊ + n₋)
    is compared with `z_limit` for every dual vertex, direction and k.
    """
    if dd.n_arcs != 3:
        raise WrongMarkedPointCount("Color switching needs a domain with 3 marked points.")
    dd.prepare_faces()
    pairs = _switching_pairs(dd)
    faces = np.array([p[0] for p in pairs], dtype=np.int64)
    ahead = np.array([p[2] for p in pairs], dtype=np.int64)
    turned = np.array([p[3] for p in pairs], dtype=np.int64)
    only_straight = np.zeros((3, len(pairs)), dtype=np.int64)
    only_rotated = np.zeros((3, len(pairs)), dtype=np.int64)
    for trial in range(trials):
        fields = separating_indicator_fields(sample_configuration(dd, seed, trial))
        straight = fields[:, ahead] & ~fields[:, faces]
        rotated = np.roll(fields[:, turned] & ~fields[:, faces], -1, axis=0)
        only_straight += straight & ~rotated
        only_rotated += rotated & ~straight

    report = VerificationReport("sampled color switching")
    discordant = only_straight + only_rotated
    z = np.where(discordant > 0, (only_straight - only_rotated) / np.sqrt(np.maximum(discordant, 1)), 0.0)
    for k in range(3):
        for index, (face, d, _, _) in enumerate(pairs):
            report.record(
                abs(z[k, index]) <= z_limit, f"face {dd.face(face)} direction {d} k={k}: z = {z[k, index]:.2f}"
            )
    report.details.update(
        {"sites": dd.n_sites, "trials": trials, "pairs": len(pairs), "max_abs_z": float(np.abs(z).max(initial=0.0))}
    )
    return report


def verify_duality(n: int = 3, m: int = 3) -> VerificationReport:
    """On the rhombus block exactly one of an open 0 ↔ 2 or a closed 1 ↔ 3 crossing occurs,
    and P(open 0 ↔ 2) = 1/2 for the square block."""
    dd = discretize(DomainSpec.rhombus(n, m), 1.0)
    report = VerificationReport("duality")
    for number, cfg in enumerate(configurations(dd)):
        open_crossing = crossing_occurs(cfg, 0, 2, Color.OPEN)
        closed_crossing = crossing_occurs(cfg, 1, 3, Color.CLOSED)
        report.record(open_crossing != closed_crossing, f"configuration #{number}")
    probability = enumerate_exact(dd, lambda cfg: crossing_occurs(cfg, 0, 2))
    if n == m:
        report.record(probability == Fraction(1, 2), f"P(0 ↔ 2) = {probability}")
    report.details.update({"sites": dd.n_sites, "probability": str(probability)})
    return report


def verify_monotonicity(dd: DiscreteDomain, trials: int = 20, seed: int = 0) -> VerificationReport:
    """Opening a closed site never destroys an open crossing between arcs 0 and 2."""
    report = VerificationReport("monotonicity")
    for trial in range(trials):
        cfg = sample_configuration(dd, seed, trial)
        if not crossing_occurs(cfg, 0, 2):
            continue
        for site in np.flatnonzero(~cfg.colors):
            report.record(
                crossing_occurs(cfg.with_color(int(site), Color.OPEN), 0, 2), f"trial {trial}, site {dd.site(site)}"
            )
    return report


def verify_color_symmetry(dd: DiscreteDomain) -> VerificationReport:
    """An open crossing of a configuration is a closed crossing of the swapped one."""
    report = VerificationReport("color symmetry")
    for number, cfg in enumerate(configurations(dd)):
        swapped = cfg.swap_colors()
        for arc_a, arc_b in itertools.combinations(range(dd.n_arcs), 2):
            report.record(
                crossing_occurs(cfg, arc_a, arc_b, Color.OPEN) == crossing_occurs(swapped, arc_a, arc_b, Color.CLOSED),
                f"configuration #{number}, arcs {arc_a}-{arc_b}",
            )
    return report


def verify_error_bars(
    dd: DiscreteDomain,
    event: Callable[[Configuration], bool],
    trials: int = 400,
    repetitions: int = 50,
    seed: int = 0,
) -> VerificationReport:
    """How often p̂ ± 3σ̂ brackets the exact probability over independent repetitions."""
    exact = enumerate_exact(dd, event)
    report = VerificationReport("error bars")
    for repetition in range(repetitions):
        estimate = estimate_probability(dd, event, trials, point_seed(seed, repetition))
        report.record(
            abs(estimate.probability - float(exact)) <= 3 * estimate.stderr,
            f"repetition {repetition}: {estimate.probability:.4f} ± {estimate.stderr:.4f} vs {float(exact):.4f}",
        )
    report.details.update({"exact": str(exact), "coverage": 1 - report.mismatches / max(report.checks, 1)})
    return report


# numerics


def _random_points(kernel: EllipticKernel, count: int, seed: int, clearance: float = 0.05) -> np.ndarray:
    rng = np.random.default_rng(seed)
    points: list[complex] = []
    corner = kernel.midpoint - (kernel.a + kernel.b) / 2
    while len(points) < count:
        u, v = rng.random(2)
        z = corner + u * kernel.a + v * kernel.b
        if kernel.pole_distance(z)[0] > clearance and abs(z - kernel.midpoint) > clearance:
            points.append(z)
    return np.array(points)


def verify_kernel(kernel: EllipticKernel | None = None, points: int = 20, seed: int = 0) -> VerificationReport:
    """Periodicity, residue balance and the double zero of the elliptic kernel."""
    kernel = EllipticKernel() if kernel is None else kernel
    report = VerificationReport("kernel")
    periodicity = kernel.periodicity_residual(_random_points(kernel, points, seed))
    residues = (kernel.residue(1), kernel.residue(2))
    residue_sum = abs(residues[0] + residues[1])
    at_zero = abs(kernel.evaluate(kernel.midpoint))
    h = 1e-5
    slope = abs(kernel.evaluate(kernel.midpoint + h) - kernel.evaluate(kernel.midpoint - h)) / (2 * h)
    report.record(periodicity <= 1e-8, f"periodicity residual {periodicity:.3g}")
    report.record(residue_sum <= 1e-6, f"residue sum {residue_sum:.3g}")
    report.record(at_zero <= 1e-8, f"value at the midpoint {at_zero:.3g}")
    report.record(slope <= 1e-6, f"derivative at the midpoint {slope:.3g}")
    report.details.update(
        {
            "periodicity_residual": periodicity,
            "residues": [residues[0], residues[1]],
            "residue_sum": residue_sum,
            "midpoint_value": at_zero,
            "midpoint_derivative": slope,
            "order": kernel.order,
        }
    )
    return report


def verify_maps() -> VerificationReport:
    """Marked-point images, conformality, symmetric cross-ratios and the agreement of the
    independent routes to the crossing limit."""
    report = VerificationReport("maps")
    values: dict[str, float] = {}
    for spec in (
        DomainSpec.triangle(),
        DomainSpec.triangle(marked_points=(0.0, 0.25, 0.6)),
        DomainSpec.half_disk(),
        DomainSpec.sector(math.pi / 2),
        DomainSpec.disk(),
        DomainSpec.half_annulus(0.25, 1.0),
    ):
        phi = triangle_map(spec)
        error = phi.marked_error()
        values[f"marked_error {spec.kind.value}"] = error
        report.record(error <= MAP_TOLERANCE, f"{spec.kind.value}: marked point error {error:.3g}")

    disk = triangle_map(DomainSpec.disk())
    residual = cauchy_riemann_residual(disk, np.array([0.1 + 0.2j, -0.3 + 0.1j, 0.2 - 0.4j]))
    values["cauchy_riemann disk"] = residual
    report.record(residual <= 1e-5, f"disk: Cauchy-Riemann residual {residual:.3g}")

    square = DomainSpec.rectangle(1.0)
    values["square cross_ratio"] = cross_ratio(square)
    report.record(abs(cross_ratio(square) - 0.5) <= 1e-9, f"square cross-ratio {cross_ratio(square)}")
    report.record(abs(crossing_limit(square) - 0.5) <= 1e-9, f"square crossing limit {crossing_limit(square)}")

    rectangle = DomainSpec.rectangle(2.0)
    sn_route, theta_route = cross_ratio(rectangle), rectangle_cross_ratio(2.0)
    values["rectangle cross_ratio"] = sn_route
    report.record(abs(sn_route - theta_route) <= 1e-9, f"rectangle cross-ratio {sn_route} vs {theta_route}")
    cardy, carleson = crossing_limit(rectangle), carleson_probability(rectangle)
    values["rectangle crossing_limit"] = cardy
    report.record(abs(cardy - carleson) <= 1e-8, f"hypergeometric {cardy} vs triangle {carleson}")

    descriptor = half_annulus_descriptor(0.125, 1.0)
    stages, theta = complex(descriptor(0.125)).real, half_annulus_corner_value(0.125)
    values["half_annulus corner"] = stages
    report.record(abs(stages - theta) <= 1e-8, f"half-annulus corner {stages} vs {theta}")

    report.details["values"] = values
    return report
