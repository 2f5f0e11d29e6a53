from __future__ import annotations
import csv
import dataclasses
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from cardy_lab.lattice.domain import DiscreteDomain
from cardy_lab.logs import ExperimentLogger as _ExperimentLogger, LOGGER_NAME as _LOGGER_NAME
from cardy_lab.models.exceptions import WrongMarkedPointCount, ParseError
from cardy_lab.models.structures import TRIANGLE_VERTICES
from cardy_lab.observable.interpolation import covered_sites, interpolate
from cardy_lab.percolation.engine import Configuration, separating_indicator_fields
from cardy_lab.percolation.rng import trial_bits
from cardy_lab.workers.pool import TrialPool


logger = _ExperimentLogger(_LOGGER_NAME)
_CSV_COLUMNS = ("i", "j", "orientation", "x", "y", "h0", "h1", "h2", "trials", "seed", "first_trial")


@dataclasses.dataclass(frozen=True, eq=False)
class ObservableField:
    """Hit counters of the three separating events at every dual vertex.

    `counts[f, k]` is the number of trials in [first_trial, first_trial + trials) where the
    event for τ^k held at face f.
    """

    domain: DiscreteDomain
    counts: np.ndarray
    trials: int
    seed: int
    first_trial: int = 0

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (self.domain.n_faces, 3):
            raise ValueError(f"Counters must have shape ({self.domain.n_faces}, 3), got {counts.shape}.")
        if self.trials < 0 or np.any(counts < 0) or np.any(counts > self.trials):
            raise ValueError("Counters must lie between 0 and the number of trials.")
        counts = counts.copy()
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def estimates(self) -> np.ndarray:
        """(n_faces, 3) estimated probabilities Ĥ_{τ^k}."""
        if self.trials == 0:
            return np.zeros(self.counts.shape)
        return self.counts / self.trials

    @property
    def stderr(self) -> np.ndarray:
        h = self.estimates
        return np.sqrt(h * (1 - h) / max(self.trials, 1))

    @property
    def sum_field(self) -> np.ndarray:
        """Ŝ = Ĥ₁ + Ĥ_τ + Ĥ_{τ²}."""
        return self.estimates.sum(axis=1)

    def merge(self, other: ObservableField) -> ObservableField:
        """Counters of the two consecutive trial ranges together."""
        if not _same_sites(self.domain, other.domain):
            raise ValueError("Fields of different domains cannot be merged.")
        if other.seed != self.seed:
            raise ValueError("Fields of different seeds cannot be merged.")
        if other.first_trial != self.first_trial + self.trials:
            raise ValueError(
                f"Trial ranges are not consecutive: {self.first_trial}+{self.trials} vs {other.first_trial}."
            )
        return ObservableField(
            self.domain, self.counts + other.counts, self.trials + other.trials, self.seed, self.first_trial
        )

    def to_csv(self, path: str) -> None:
        dd = self.domain
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(_CSV_COLUMNS)
            for face, vertex in enumerate(dd.dual_vertices):
                z = dd.face_positions[face]
                writer.writerow(
                    [
                        vertex.base.i,
                        vertex.base.j,
                        int(vertex.orientation),
                        format(z.real, ".17g"),
                        format(z.imag, ".17g"),
                        *(int(c) for c in self.counts[face]),
                        self.trials,
                        self.seed,
                        self.first_trial,
                    ]
                )

    @staticmethod
    def from_csv(path: str, dd: DiscreteDomain) -> ObservableField:
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        if not rows or tuple(rows[0]) != _CSV_COLUMNS:
            raise ParseError(f"{path}: line 1: expected the header {','.join(_CSV_COLUMNS)}.")
        body = rows[1:]
        if len(body) != dd.n_faces:
            raise ParseError(f"{path}: {len(body)} dual vertices, the domain has {dd.n_faces}.")
        counts = np.zeros((dd.n_faces, 3), dtype=np.int64)
        trials = seed = first = None
        for line, (row, vertex) in enumerate(zip(body, dd.dual_vertices), start=2):
            if (int(row[0]), int(row[1]), int(row[2])) != (vertex.base.i, vertex.base.j, int(vertex.orientation)):
                raise ParseError(f"{path}: line {line}: dual vertex does not match the domain.")
            counts[line - 2] = [int(c) for c in row[5:8]]
            trials, seed, first = int(row[8]), int(row[9]), int(row[10])
        return ObservableField(dd, counts, trials or 0, seed or 0, first or 0)


def _same_sites(a: DiscreteDomain, b: DiscreteDomain) -> bool:
    return a is b or (
        a.mesh == b.mesh and np.array_equal(a.i, b.i) and np.array_equal(a.j, b.j)
    )


def _require_three_points(dd: DiscreteDomain) -> None:
    if dd.n_arcs != 3:
        raise WrongMarkedPointCount(f"The observable needs 3 marked points, the domain has {dd.n_arcs}.")


def count_separating_events(dd: DiscreteDomain, seed: int, first_trial: int, stop_trial: int) -> np.ndarray:
    """(n_faces, 3) numbers of trials in the range where each separating event holds."""
    counts = np.zeros((dd.n_faces, 3), dtype=np.int64)
    bits = trial_bits(seed, first_trial, stop_trial, dd.i, dd.j)
    for offset, colors in enumerate(bits):
        cfg = Configuration(dd, colors, seed, first_trial + offset)
        counts += separating_indicator_fields(cfg).T
    return counts


def estimate_fields(
    dd: DiscreteDomain,
    trials: int,
    seed: int,
    first_trial: int = 0,
    workers: int = 1,
) -> ObservableField:
    """Monte Carlo estimate of Ĥ_{τ^k} at every dual vertex."""
    _require_three_points(dd)
    if trials < 1:
        raise ValueError("At least one trial is needed.")
    dd.prepare_faces()
    context = f"observable δ={dd.mesh:g}"
    logger.info(f"Estimating separating events on {dd.n_faces} dual vertices, {trials} trials.", context)
    pool = TrialPool(workers, context=context)
    chunks = pool.run(
        lambda start, stop: count_separating_events(dd, seed, start, stop), first_trial, first_trial + trials
    )
    counts = sum((c.value for c in chunks), np.zeros((dd.n_faces, 3), dtype=np.int64))
    return ObservableField(dd, counts, trials, seed, first_trial)


def forced_field(cfg: Configuration) -> ObservableField:
    """The field of a single given configuration."""
    _require_three_points(cfg.domain)
    return ObservableField(cfg.domain, separating_indicator_fields(cfg).T.astype(np.int64), 1, 0)


def g_field(f: ObservableField) -> np.ndarray:
    """Ĝ = Ĥ₁ + τĤ_τ + τ²Ĥ_{τ²} at every dual vertex."""
    return f.estimates @ np.array(TRIANGLE_VERTICES)


def _project_to_segment(w: np.ndarray, a: complex, b: complex) -> np.ndarray:
    t = ((w - a) * np.conj(b - a)).real / abs(b - a) ** 2
    return a + np.clip(t, 0.0, 1.0) * (b - a)


def modify_boundary(f: ObservableField, g_values: np.ndarray) -> np.ndarray:
    """G̃: vertices next to x(τ^k) take the value τ^k, vertices next to the arc from x(τ^a)
    to x(τ^{a+1}) are projected onto the side [τ^a, τ^{a+1}], the others are kept."""
    dd = f.domain
    _require_three_points(dd)
    result = np.array(g_values, dtype=complex)
    corners = dd.face_corners
    done = np.zeros(dd.n_faces, dtype=bool)
    for k, marked in enumerate(dd.marked_site_indices):
        at_mark = np.any(corners == marked, axis=1) & ~done
        result[at_mark] = TRIANGLE_VERTICES[k]
        done |= at_mark
    for a in range(3):
        near_arc = dd.touch[corners, a].any(axis=1) & ~done
        result[near_arc] = _project_to_segment(
            result[near_arc], TRIANGLE_VERTICES[a], TRIANGLE_VERTICES[(a + 1) % 3]
        )
        done |= near_arc
    return result


def sample_points(dd: DiscreteDomain) -> np.ndarray:
    """Dual vertices of the fully surrounded hexagons and their centers, restricted to the
    closed domain."""
    covered = covered_sites(dd)
    in_covered = covered[dd.face_corners].any(axis=1)
    points = np.concatenate((dd.face_positions[in_covered], dd.positions[covered]))
    if dd.shape is not None:
        points = points[dd.shape.contains_closed(points)]
    return points


def sup_deviation(
    dd: DiscreteDomain,
    values: np.ndarray,
    phi: Callable[[np.ndarray], np.ndarray],
    points: np.ndarray | None = None,
) -> float:
    """max |interpolated field − φ| over the sample points."""
    points = sample_points(dd) if points is None else np.asarray(points, dtype=complex)
    return float(np.max(np.abs(interpolate(dd, values, points) - phi(points))))


def holder_quotient(
    f: ObservableField, k: int, exponent: float = 0.1, min_separation: float = 10.0, max_vertices: int = 1500
) -> float:
    """max |Ĥ_{τ^k}(z) − Ĥ_{τ^k}(z′)| / |z − z′|^exponent over pairs at least
    `min_separation` meshes apart; large domains are thinned to `max_vertices` vertices."""
    dd = f.domain
    stride = max(1, -(-dd.n_faces // max_vertices))
    chosen = np.arange(0, dd.n_faces, stride)
    z = dd.face_positions[chosen]
    h = f.estimates[chosen, k]
    distance = np.abs(z[:, None] - z[None, :])
    far = distance >= min_separation * dd.mesh
    if not far.any():
        return 0.0
    quotient = np.abs(h[:, None] - h[None, :])[far] / distance[far] ** exponent
    return float(quotient.max())


@dataclasses.dataclass(frozen=True)
class BoundaryReport:
    """Boundary behavior of an estimated field.

    `max_sum_deviation` is max |Ŝ − 1| over vertices near any arc; `max_far_arc[k]` is the
    largest Ĥ_{τ^k} next to the arc from x(τ^{k+1}) to x(τ^{k+2}). The `mean_` fields average
    the same quantities over the same vertices.
    """

    distance: float
    vertices: int
    max_sum_deviation: float
    max_far_arc: tuple[float, float, float]
    mean_sum_deviation: float = 0.0
    mean_far_arc: tuple[float, float, float] = (0.0, 0.0, 0.0)


def boundary_report(f: ObservableField, distance: float | None = None) -> BoundaryReport:
    dd = f.domain
    _require_three_points(dd)
    distance = 2 * dd.mesh if distance is None else distance
    faces = np.column_stack((dd.face_positions.real, dd.face_positions.imag))
    near = np.zeros((dd.n_faces, 3), dtype=bool)
    for a in range(3):
        sites = dd.positions[dd.arc_sites(a)]
        tree = cKDTree(np.column_stack((sites.real, sites.imag)))
        d, _ = tree.query(faces)
        near[:, a] = d <= distance
    any_arc = near.any(axis=1)
    deviation = np.abs(f.sum_field[any_arc] - 1)
    h = f.estimates
    far = [h[near[:, (k + 1) % 3], k] for k in range(3)]
    return BoundaryReport(
        distance=distance,
        vertices=int(any_arc.sum()),
        max_sum_deviation=float(deviation.max()) if deviation.size else 0.0,
        max_far_arc=tuple(float(v.max()) if v.size else 0.0 for v in far),
        mean_sum_deviation=float(deviation.mean()) if deviation.size else 0.0,
        mean_far_arc=tuple(float(v.mean()) if v.size else 0.0 for v in far),
    )
