from __future__ import annotations
import dataclasses
import functools

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse import csgraph

from cardy_lab.lattice.domain import DiscreteDomain, in_closed_sector
from cardy_lab.lattice.geometry import HEX_STRUCTURE, NEIGHBOR_OFFSETS, positions as _positions
from cardy_lab.models.exceptions import EmptyRegion, UnknownArc, WrongMarkedPointCount
from cardy_lab.models.structures import ArmSpec, Color
from cardy_lab.percolation.rng import site_bits, trial_key


@dataclasses.dataclass(frozen=True, eq=False)
class Configuration:
    """Colors of all sites of a domain; `colors[s]` is True for an open site."""

    domain: DiscreteDomain
    colors: np.ndarray
    seed: int | None = None
    trial_index: int | None = None

    def __post_init__(self):
        colors = np.asarray(self.colors, dtype=bool)
        if colors.shape != (self.domain.n_sites,):
            raise ValueError(
                f"Configuration needs one color per site ({self.domain.n_sites}), got {colors.shape}."
            )
        colors = colors.copy()
        colors.flags.writeable = False
        object.__setattr__(self, "colors", colors)

    @staticmethod
    def uniform(dd: DiscreteDomain, color: Color) -> Configuration:
        return Configuration(dd, np.full(dd.n_sites, color == Color.OPEN, dtype=bool))

    def swap_colors(self) -> Configuration:
        return Configuration(self.domain, ~self.colors, self.seed, self.trial_index)

    def with_color(self, site: int, color: Color) -> Configuration:
        colors = self.colors.copy()
        colors[site] = color == Color.OPEN
        return Configuration(self.domain, colors)

    def color_of(self, site: int) -> Color:
        return Color.OPEN if self.colors[site] else Color.CLOSED

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.domain is other.domain and np.array_equal(self.colors, other.colors)

    __hash__ = None


def sample_configuration(dd: DiscreteDomain, seed: int, trial_index: int) -> Configuration:
    """Critical configuration of trial `trial_index`: every site open with probability 1/2."""
    colors = site_bits(trial_key(seed, trial_index), dd.i, dd.j)
    return Configuration(dd, colors, seed, trial_index)


@dataclasses.dataclass(frozen=True, eq=False)
class ClusterLabeling:
    """Clusters of one color. `labels[s]` is -1 for sites of the other color;
    `touched[c, a]` tells whether cluster c has a site touching arc a."""

    color: Color
    labels: np.ndarray
    n_clusters: int
    touched: np.ndarray

    def label_of(self, site: int) -> int:
        return int(self.labels[site])

    def touched_arcs(self, cluster: int) -> frozenset[int]:
        return frozenset(int(a) for a in np.flatnonzero(self.touched[cluster]))

    def crossing(self, arc_a: int, arc_b: int) -> np.ndarray:
        """Flags of the clusters touching both arcs."""
        return self.touched[:, arc_a] & self.touched[:, arc_b]


def _label_grid(dd: DiscreteDomain, mask: np.ndarray) -> tuple[np.ndarray, int]:
    labeled, count = ndimage.label(dd.to_grid(mask, False), structure=HEX_STRUCTURE)
    return labeled.flat[dd.flat_indices].astype(np.int64) - 1, int(count)


def label_clusters(cfg: Configuration, color: Color) -> ClusterLabeling:
    dd = cfg.domain
    mask = cfg.colors if color == Color.OPEN else ~cfg.colors
    labels, count = _label_grid(dd, mask)
    touched = np.zeros((count, dd.n_arcs), dtype=bool)
    for a in range(dd.n_arcs):
        sites = dd.touch[:, a] & (labels >= 0)
        touched[labels[sites], a] = True
    return ClusterLabeling(Color(color), labels, count, touched)


def _check_arc(dd: DiscreteDomain, arc: int) -> None:
    if not 0 <= arc < dd.n_arcs:
        raise UnknownArc(f"Arc {arc} does not exist; the domain has {dd.n_arcs} arcs.")


def crossing_occurs(
    cfg: Configuration,
    arc_a: int,
    arc_b: int,
    color: Color = Color.OPEN,
    labeling: ClusterLabeling | None = None,
) -> bool:
    """True iff some cluster of `color` touches both arcs."""
    _check_arc(cfg.domain, arc_a)
    _check_arc(cfg.domain, arc_b)
    if arc_a == arc_b:
        raise ValueError("A crossing joins two different arcs.")
    labeling = labeling if labeling is not None else label_clusters(cfg, color)
    return bool(labeling.crossing(arc_a, arc_b).any())


# separating events


def separation_arcs(k: int) -> tuple[int, int, int]:
    """(start arc, end arc, separated arc) of the separating event for τ^k.

    The open path runs from [x(τ^{k+2}), x(τ^k)] to [x(τ^k), x(τ^{k+1})] and cuts the dual
    vertex off from [x(τ^{k+1}), x(τ^{k+2})].
    """
    return (k + 2) % 3, k % 3, (k + 1) % 3


def crossing_core(
    dd: DiscreteDomain, open_sites: np.ndarray, start_sites: np.ndarray, end_sites: np.ndarray
) -> np.ndarray:
    """Flags of the open sites lying on at least one simple open path from a flagged start
    site to a flagged end site.

    With a virtual source joined to the start sites, a virtual sink joined to the end sites
    and an extra source-sink edge, these are exactly the sites of the biconnected component
    holding that extra edge.
    """
    n = dd.n_sites
    sources = np.flatnonzero(open_sites & start_sites)
    sinks = np.flatnonzero(open_sites & end_sites)
    core = np.zeros(n, dtype=bool)
    if sources.size == 0 or sinks.size == 0:
        return core

    source, sink = n, n + 1
    neighbors = dd.neighbors
    adjacency: dict[int, list[int]] = {source: [sink], sink: [source]}
    adjacency[source].extend(int(s) for s in sources)
    adjacency[sink].extend(int(s) for s in sinks)
    for s in np.flatnonzero(open_sites):
        row = neighbors[s]
        adjacency[int(s)] = [int(t) for t in row if t >= 0 and open_sites[t]]
    for s in sources:
        adjacency[int(s)].append(source)
    for s in sinks:
        adjacency[int(s)].append(sink)

    disc = {source: 0}
    low = {source: 0}
    counter = 1
    edge_stack: list[tuple[int, int]] = []
    dfs = [(source, -1, iter(adjacency[source]))]
    while dfs:
        v, parent, pending = dfs[-1]
        descended = False
        for w in pending:
            if w not in disc:
                disc[w] = low[w] = counter
                counter += 1
                edge_stack.append((v, w))
                dfs.append((w, v, iter(adjacency[w])))
                descended = True
                break
            if w != parent and disc[w] < disc[v]:
                edge_stack.append((v, w))
                low[v] = min(low[v], disc[w])
        if descended:
            continue
        dfs.pop()
        if not dfs:
            break
        u = dfs[-1][0]
        low[u] = min(low[u], low[v])
        if low[v] >= disc[u]:
            component: set[int] = set()
            while True:
                edge = edge_stack.pop()
                component.update(edge)
                if edge == (u, v):
                    break
            if source in component and sink in component:
                component.discard(source)
                component.discard(sink)
                core[list(component)] = True
                return core
    return core


def _unreached_faces(dd: DiscreteDomain, blocked_sites: np.ndarray, seeds: np.ndarray) -> np.ndarray:
    """Faces not reachable from `seeds` when no dual edge may cross a lattice edge joining
    two blocked sites."""
    edges = dd.face_edges
    n_faces = dd.n_faces
    if n_faces == 0:
        return np.zeros(0, dtype=bool)
    free = ~(blocked_sites[edges[:, 2]] & blocked_sites[edges[:, 3]])
    fa, fb = edges[free, 0], edges[free, 1]
    # one virtual face joined to every seed
    hub = n_faces
    seed_ids = np.flatnonzero(seeds)
    rows = np.concatenate((fa, seed_ids))
    cols = np.concatenate((fb, np.full(seed_ids.size, hub)))
    graph = sparse.coo_matrix(
        (np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(n_faces + 1, n_faces + 1)
    )
    _, component = csgraph.connected_components(graph, directed=False)
    return component[:n_faces] != component[hub]


def _clusters_touching(labels: np.ndarray, n_clusters: int, sites: np.ndarray) -> np.ndarray:
    hits = np.zeros(n_clusters, dtype=bool)
    hits[labels[sites & (labels >= 0)]] = True
    return hits


def separating_indicator_field(
    cfg: Configuration, k: int, labeling: ClusterLabeling | None = None
) -> np.ndarray:
    """Per dual vertex, whether a simple open path from arc k+2 to arc k separates it from
    arc k+1 (arcs taken mod 3).

    Arcs are read on the exterior ring of the domain: the path starts next to the ring part
    of arc k+2 and ends next to the ring part of arc k, and a dual vertex is separated when
    it cannot reach the ring part of arc k+1 without crossing the path or the ring parts of
    the two other arcs.
    """
    dd = cfg.domain
    if dd.n_arcs != 3:
        raise WrongMarkedPointCount(
            f"Separating events need exactly 3 marked points, the domain has {dd.n_arcs}."
        )
    start, end, far = separation_arcs(k)
    ring = dd.exterior
    labeling = labeling if labeling is not None else label_clusters(cfg, Color.OPEN)
    labels = labeling.labels
    crossing = _clusters_touching(labels, labeling.n_clusters, ring.touch[:, start]) & _clusters_touching(
        labels, labeling.n_clusters, ring.touch[:, end]
    )
    if not crossing.any():
        return np.zeros(dd.n_faces, dtype=bool)
    in_crossing = (labels >= 0) & crossing[np.maximum(labels, 0)]
    core = crossing_core(dd, in_crossing, ring.touch[:, start], ring.touch[:, end])
    blocked = ring.walls(start, end)
    blocked[ring.inner[core]] = True
    return _unreached_faces(ring.domain, blocked, ring.faces_touching(far))[ring.faces]


def separating_indicator_fields(cfg: Configuration) -> np.ndarray:
    """(3, n_faces) separating indicators for k = 0, 1, 2 with a single cluster labeling."""
    labeling = label_clusters(cfg, Color.OPEN)
    return np.stack([separating_indicator_field(cfg, k, labeling) for k in range(3)])


# arm events


@functools.lru_cache(maxsize=32)
def sector_geometry(dd: DiscreteDomain, spec: ArmSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Sector membership, inner and outer touches, and the ordering key of each site."""
    inside = in_closed_sector(
        dd.positions, spec.inner_radius, spec.outer_radius, spec.angle, spec.center, spec.start_angle
    )
    inner = np.zeros(dd.n_sites, dtype=bool)
    outer = np.zeros(dd.n_sites, dtype=bool)
    for di, dj in NEIGHBOR_OFFSETS:
        distance = np.abs(_positions(dd.i + di, dd.j + dj, dd.mesh) - spec.center)
        inner |= distance < spec.inner_radius
        outer |= distance > spec.outer_radius
    w = dd.positions - spec.center
    angle = np.mod(np.angle(w) - spec.start_angle + 1e-12, 2 * np.pi) - 1e-12
    return inside, inner & inside, outer & inside, np.column_stack((angle, np.abs(w)))


def crossing_cluster_colors(cfg: Configuration, spec: ArmSpec) -> list[Color]:
    """Colors of the clusters crossing the sector from radius r to radius R, ordered
    counter-clockwise by their first inner touch."""
    dd = cfg.domain
    inside, inner, outer, key = sector_geometry(dd, spec)
    if not inside.any():
        raise EmptyRegion("The annular sector contains no site of the domain.")
    entries = []
    for color in (Color.OPEN, Color.CLOSED):
        mask = inside & (cfg.colors if color == Color.OPEN else ~cfg.colors)
        labels, count = _label_grid(dd, mask)
        if count == 0:
            continue
        hits_inner = np.zeros(count, dtype=bool)
        hits_outer = np.zeros(count, dtype=bool)
        hits_inner[labels[inner & (labels >= 0)]] = True
        hits_outer[labels[outer & (labels >= 0)]] = True
        for cluster in np.flatnonzero(hits_inner & hits_outer):
            touches = np.flatnonzero(inner & (labels == cluster))
            first = min(touches, key=lambda s: (key[s, 0], key[s, 1]))
            entries.append((key[first, 0], key[first, 1], color))
    entries.sort(key=lambda e: (e[0], e[1]))
    return [color for _, _, color in entries]


def _runs(colors: list[Color]) -> list[Color]:
    runs: list[Color] = []
    for color in colors:
        if not runs or runs[-1] != color:
            runs.append(color)
    return runs


def _linear_arm_count(colors: list[Color], start_color: Color | None) -> int:
    runs = _runs(colors)
    if runs and start_color is not None and runs[0] != start_color:
        runs = runs[1:]
    return len(runs)


def arm_count(colors: list[Color], spec: ArmSpec) -> int:
    """Largest number of alternating arms realizable by distinct crossing clusters."""
    if not spec.full_turn:
        return _linear_arm_count(colors, spec.start_color)
    if not colors:
        return 0
    return max(
        _linear_arm_count(colors[shift:] + colors[:shift], spec.start_color) for shift in range(len(colors))
    )


def arm_event_occurs(cfg: Configuration, spec: ArmSpec) -> bool:
    """True iff the sector holds `spec.k` disjoint crossings of alternating colors."""
    return arm_count(crossing_cluster_colors(cfg, spec), spec) >= spec.k


def outer_touch_sites(dd: DiscreteDomain, outer_radius: float, center: complex = 0j) -> np.ndarray:
    """Sites having a lattice neighbor beyond `outer_radius`, whether or not it is in the domain."""
    outer = np.zeros(dd.n_sites, dtype=bool)
    for di, dj in NEIGHBOR_OFFSETS:
        outer |= np.abs(_positions(dd.i + di, dd.j + dj, dd.mesh) - center) > outer_radius
    return outer


def origin_arm_occurs(cfg: Configuration, origin: int, outer: np.ndarray) -> bool:
    """True iff the open cluster of site `origin` contains a site flagged in `outer`."""
    if not cfg.colors[origin]:
        return False
    labels, _ = _label_grid(cfg.domain, cfg.colors)
    return bool(np.any(outer & (labels == labels[origin])))


class ClusterFlood:
    """Open clusters grown from the `sources` sites, drawing a site color only when the
    flood first reaches the site.

    Colors come from `site_bits` with the trial key, so `reaches(trial_key(seed, t))` agrees
    with the full configuration of trial t. The flood stops at the first open site flagged
    in `targets`.
    """

    def __init__(self, dd: DiscreteDomain, sources: np.ndarray, targets: np.ndarray) -> None:
        self._dd = dd
        self._width = dd.grid_shape[1]
        self._inside = dd.to_grid(np.ones(dd.n_sites, dtype=bool), False).ravel()
        self._targets = dd.to_grid(np.asarray(targets, dtype=bool), False).ravel()
        self._sources = dd.flat_indices[np.asarray(sources, dtype=bool)]
        self._steps = np.array([di * self._width + dj for di, dj in NEIGHBOR_OFFSETS], dtype=np.int64)

    @property
    def domain(self) -> DiscreteDomain:
        return self._dd

    def _open(self, key: int, flat: np.ndarray) -> np.ndarray:
        a, b = np.divmod(flat, self._width)
        origin = self._dd.grid_origin
        return site_bits(key, a + origin[0], b + origin[1])

    def reaches(self, key: int) -> bool:
        visited = np.zeros(self._inside.size, dtype=bool)
        visited[self._sources] = True
        frontier = self._sources[self._open(key, self._sources)]
        while frontier.size:
            if self._targets[frontier].any():
                return True
            around = (frontier[:, None] + self._steps[None, :]).ravel()
            around = np.unique(around[self._inside[around] & ~visited[around]])
            visited[around] = True
            frontier = around[self._open(key, around)]
        return False
