from __future__ import annotations
import functools
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from cardy_lab.logs import LabLogger as _LabLogger, LOGGER_NAME as _LOGGER_NAME
from cardy_lab.lattice.geometry import (
    HEX_STRUCTURE,
    NEIGHBOR_OFFSETS,
    axial_bounds,
    positions as _positions,
    shifted as _shifted,
)
from cardy_lab.lattice.shapes import DomainKind, DomainSpec, Shape
from cardy_lab.models.exceptions import InvalidSpec, MeshTooCoarse, UnknownVertex, UnknownArc
from cardy_lab.models.structures import DualVertex, Orientation, SiteCoord


logger = _LabLogger(_LOGGER_NAME)


class DiscreteDomain:
    """Sites of the triangular lattice at mesh δ with their dual faces and boundary arcs.

    Sites are stored in lexicographic (i, j) order; per-site data are numpy arrays indexed
    by that order. Arc `a` runs from marked site `a` (inclusive) to marked site `a + 1`;
    for connection purposes the closing marked site touches arc `a` as well, so corners
    belong to both adjacent arcs. The object is immutable once built.
    """

    def __init__(
        self,
        mesh: float,
        i: np.ndarray,
        j: np.ndarray,
        arc_of_site: np.ndarray | None = None,
        marked_sites: Sequence[int] = (),
        spec: DomainSpec | None = None,
        shape: Shape | None = None,
        marked_parameters: Sequence[float] = (),
    ) -> None:
        if mesh <= 0:
            raise InvalidSpec("Mesh must be positive.")
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        if i.size == 0:
            raise MeshTooCoarse("The domain contains no lattice site.")
        order = np.lexsort((j, i))
        inverse = np.empty_like(order)
        inverse[order] = np.arange(order.size)
        self._mesh = float(mesh)
        self._i = i[order]
        self._j = j[order]
        self._i.flags.writeable = False
        self._j.flags.writeable = False
        self._spec = spec
        self._shape = shape
        n = self._i.size
        arcs = np.full(n, -1, dtype=np.int64) if arc_of_site is None else np.asarray(arc_of_site)[order]
        self._arc = arcs.astype(np.int64)
        self._arc.flags.writeable = False
        self._marked = tuple(int(inverse[s]) for s in marked_sites)
        self._marked_parameters = tuple(marked_parameters)

        self._origin = (int(self._i.min()) - 1, int(self._j.min()) - 1)
        grid_shape = (
            int(self._i.max()) - self._origin[0] + 2,
            int(self._j.max()) - self._origin[1] + 2,
        )
        self._site_id = np.full(grid_shape, -1, dtype=np.int64)
        self._site_id[self._i - self._origin[0], self._j - self._origin[1]] = np.arange(n)
        if np.count_nonzero(self._site_id >= 0) != n:
            raise InvalidSpec("Duplicate sites given to the domain.")
        self._flat = np.ravel_multi_index(
            (self._i - self._origin[0], self._j - self._origin[1]), grid_shape
        )
        self._positions = _positions(self._i, self._j, self._mesh)

        neighbors = np.empty((n, 6), dtype=np.int64)
        for k, (di, dj) in enumerate(NEIGHBOR_OFFSETS):
            neighbors[:, k] = _shifted(self._site_id, int(di), int(dj), -1)[
                self._i - self._origin[0], self._j - self._origin[1]
            ]
        self._neighbors = neighbors
        self._boundary = np.any(neighbors < 0, axis=1)

        n_arcs = len(self._marked)
        touch = np.zeros((n, n_arcs), dtype=bool)
        for a in range(n_arcs):
            touch[:, a] = self._arc == a
            touch[self._marked[(a + 1) % n_arcs], a] = True
        self._touch = touch
        self._touch.flags.writeable = False

    @staticmethod
    def build(
        mesh: float,
        sites: Iterable[SiteCoord],
        arc_of_site: dict[SiteCoord, int] | None = None,
        marked_sites: Sequence[SiteCoord] = (),
    ) -> DiscreteDomain:
        """Build a domain from explicit sites, arc labels and marked sites."""
        sites = [SiteCoord(*s) for s in sites]
        index = {s: k for k, s in enumerate(sites)}
        arcs = np.full(len(sites), -1, dtype=np.int64)
        for site, arc in (arc_of_site or {}).items():
            arcs[index[SiteCoord(*site)]] = arc
        return DiscreteDomain(
            mesh,
            np.array([s.i for s in sites]),
            np.array([s.j for s in sites]),
            arcs,
            [index[SiteCoord(*s)] for s in marked_sites],
        )

    @property
    def mesh(self) -> float:
        return self._mesh

    @property
    def spec(self) -> DomainSpec | None:
        return self._spec

    @property
    def shape(self) -> Shape | None:
        return self._shape

    @property
    def n_sites(self) -> int:
        return self._i.size

    @property
    def n_arcs(self) -> int:
        return len(self._marked)

    @property
    def i(self) -> np.ndarray:
        return self._i

    @property
    def j(self) -> np.ndarray:
        return self._j

    @property
    def positions(self) -> np.ndarray:
        return self._positions

    @property
    def neighbors(self) -> np.ndarray:
        """(n_sites, 6) neighbor indices in counter-clockwise order, -1 outside the domain."""
        return self._neighbors

    @property
    def is_boundary(self) -> np.ndarray:
        return self._boundary

    @property
    def arc_labels(self) -> np.ndarray:
        return self._arc

    @property
    def touch(self) -> np.ndarray:
        """(n_sites, n_arcs) flags of sites touching each arc."""
        return self._touch

    @property
    def marked_site_indices(self) -> tuple[int, ...]:
        return self._marked

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self._site_id.shape

    @property
    def grid_origin(self) -> tuple[int, int]:
        """Lattice coordinate of grid cell (0, 0); the grid keeps one empty cell on every side."""
        return self._origin

    @property
    def flat_indices(self) -> np.ndarray:
        return self._flat

    @functools.cached_property
    def sites(self) -> tuple[SiteCoord, ...]:
        return tuple(SiteCoord(int(a), int(b)) for a, b in zip(self._i, self._j))

    @property
    def boundary_arc_of_site(self) -> dict[SiteCoord, int]:
        return {
            SiteCoord(int(self._i[s]), int(self._j[s])): int(self._arc[s])
            for s in np.flatnonzero(self._arc >= 0)
        }

    @property
    def marked_site(self) -> dict[float, SiteCoord]:
        params = self._marked_parameters or tuple(range(len(self._marked)))
        return {p: self.site(s) for p, s in zip(params, self._marked)}

    def site(self, index: int) -> SiteCoord:
        return SiteCoord(int(self._i[index]), int(self._j[index]))

    def site_index(self, site: SiteCoord) -> int:
        a, b = site[0] - self._origin[0], site[1] - self._origin[1]
        if 0 <= a < self._site_id.shape[0] and 0 <= b < self._site_id.shape[1]:
            index = int(self._site_id[a, b])
            if index >= 0:
                return index
        raise UnknownVertex(f"Site {tuple(site)} does not belong to the domain.")

    def arc_sites(self, arc: int) -> np.ndarray:
        if not 0 <= arc < self.n_arcs:
            raise UnknownArc(f"Arc {arc} does not exist; the domain has {self.n_arcs} arcs.")
        return np.flatnonzero(self._touch[:, arc])

    def to_grid(self, values: np.ndarray, fill=0) -> np.ndarray:
        grid = np.full(self._site_id.shape, fill, dtype=np.asarray(values).dtype)
        grid.flat[self._flat] = values
        return grid

    # dual faces

    @functools.cached_property
    def _faces(self) -> _Faces:
        return _Faces(self)

    def prepare_faces(self) -> None:
        """Build the dual structures ahead of concurrent use."""
        _ = self._faces
        if self.n_arcs:
            self.exterior.domain.prepare_faces()

    @functools.cached_property
    def exterior(self) -> Exterior:
        """Lattice sites just outside the domain, labeled by the arc they border."""
        return Exterior(self)

    @property
    def n_faces(self) -> int:
        return self._faces.corners.shape[0]

    @property
    def face_corners(self) -> np.ndarray:
        return self._faces.corners

    @property
    def face_positions(self) -> np.ndarray:
        return self._faces.positions

    @property
    def face_edges(self) -> np.ndarray:
        """(n_edges, 4) rows (face_a, face_b, site_p, site_q) of dual edges and the lattice
        edge they cross."""
        return self._faces.edges

    @property
    def face_degree(self) -> np.ndarray:
        return self._faces.degree

    @functools.cached_property
    def dual_vertices(self) -> tuple[DualVertex, ...]:
        f = self._faces
        return tuple(
            DualVertex(SiteCoord(int(a), int(b)), Orientation(int(o)))
            for a, b, o in zip(f.base_i, f.base_j, f.orientation)
        )

    def face_index(self, v: DualVertex) -> int:
        f = self._faces
        a, b = v.base[0] - self._origin[0], v.base[1] - self._origin[1]
        grid = f.up_id if v.orientation == Orientation.UP else f.down_id
        if 0 <= a < grid.shape[0] and 0 <= b < grid.shape[1] and grid[a, b] >= 0:
            return int(grid[a, b])
        raise UnknownVertex(f"Dual vertex {v} does not belong to the domain.")

    @functools.cached_property
    def hexagon_faces(self) -> np.ndarray:
        """(n_sites, 6) faces around each site, counter-clockwise from the face between the
        east and north-east neighbors; -1 where a face is missing."""
        f = self._faces
        a = self._i - self._origin[0]
        b = self._j - self._origin[1]

        def look(grid: np.ndarray, da: int, db: int) -> np.ndarray:
            x, y = a + da, b + db
            ok = (x >= 0) & (x < grid.shape[0]) & (y >= 0) & (y < grid.shape[1])
            out = np.full(a.size, -1, dtype=np.int64)
            out[ok] = grid[x[ok], y[ok]]
            return out

        ring = np.column_stack(
            (
                look(f.up_id, 0, 0),
                look(f.down_id, -1, 0),
                look(f.up_id, -1, 0),
                look(f.down_id, -1, -1),
                look(f.up_id, 0, -1),
                look(f.down_id, 0, -1),
            )
        )
        ring.flags.writeable = False
        return ring

    def face(self, index: int) -> DualVertex:
        f = self._faces
        return DualVertex(
            SiteCoord(int(f.base_i[index]), int(f.base_j[index])), Orientation(int(f.orientation[index]))
        )


class _Faces:
    """Dual structures of a domain: faces, their corners and the face adjacency."""

    def __init__(self, dd: DiscreteDomain) -> None:
        sid = dd._site_id
        present = sid >= 0
        s00 = present[:-1, :-1]
        s10 = present[1:, :-1]
        s01 = present[:-1, 1:]
        s11 = present[1:, 1:]
        up = s00 & s10 & s01
        down = s10 & s01 & s11
        ua, ub = np.nonzero(up)
        da, db = np.nonzero(down)
        base_a = np.concatenate((ua, da))
        base_b = np.concatenate((ub, db))
        orient = np.concatenate((np.zeros(ua.size, np.int64), np.ones(da.size, np.int64)))
        order = np.lexsort((orient, base_b, base_a))
        base_a, base_b, orient = base_a[order], base_b[order], orient[order]
        n_faces = base_a.size

        self.up_id = np.full(up.shape, -1, dtype=np.int64)
        self.down_id = np.full(down.shape, -1, dtype=np.int64)
        ids = np.arange(n_faces)
        is_up = orient == 0
        self.up_id[base_a[is_up], base_b[is_up]] = ids[is_up]
        self.down_id[base_a[~is_up], base_b[~is_up]] = ids[~is_up]

        corners = np.empty((n_faces, 3), dtype=np.int64)
        corners[is_up, 0] = sid[base_a[is_up], base_b[is_up]]
        corners[is_up, 1] = sid[base_a[is_up] + 1, base_b[is_up]]
        corners[is_up, 2] = sid[base_a[is_up], base_b[is_up] + 1]
        corners[~is_up, 0] = sid[base_a[~is_up] + 1, base_b[~is_up]]
        corners[~is_up, 1] = sid[base_a[~is_up], base_b[~is_up] + 1]
        corners[~is_up, 2] = sid[base_a[~is_up] + 1, base_b[~is_up] + 1]
        self.corners = corners
        self.positions = dd.positions[corners].mean(axis=1)
        self.base_i = base_a + dd._origin[0]
        self.base_j = base_b + dd._origin[1]
        self.orientation = orient

        edges = []
        # up(a, b) | down(a, b) across (a+1, b)-(a, b+1)
        a, b = np.nonzero((self.up_id >= 0) & (self.down_id >= 0))
        edges.append(np.column_stack((self.up_id[a, b], self.down_id[a, b], sid[a + 1, b], sid[a, b + 1])))
        # up(a, b) | down(a, b-1) across (a, b)-(a+1, b)
        a, b = np.nonzero((self.up_id[:, 1:] >= 0) & (self.down_id[:, :-1] >= 0))
        b = b + 1
        edges.append(np.column_stack((self.up_id[a, b], self.down_id[a, b - 1], sid[a, b], sid[a + 1, b])))
        # up(a, b) | down(a-1, b) across (a, b)-(a, b+1)
        a, b = np.nonzero((self.up_id[1:, :] >= 0) & (self.down_id[:-1, :] >= 0))
        a = a + 1
        edges.append(np.column_stack((self.up_id[a, b], self.down_id[a - 1, b], sid[a, b], sid[a, b + 1])))
        self.edges = np.concatenate(edges).astype(np.int64) if n_faces else np.empty((0, 4), np.int64)
        self.degree = np.bincount(self.edges[:, :2].ravel(), minlength=n_faces)
        for array in (self.corners, self.positions, self.edges, self.degree):
            array.flags.writeable = False


class Exterior:
    """The ring of lattice sites just outside a domain, split between the boundary arcs.

    A ring site takes the arc of its neighbors in the domain. Where it borders two
    consecutive arcs it takes the earlier one in counter-clockwise order, so a marked site
    touches the arc it closes as well as the arc it opens. `domain` is the domain with the
    ring added; `inner` and `faces` give the padded index of every site and face of the
    original domain.
    """

    def __init__(self, dd: DiscreteDomain) -> None:
        present = dd._site_id >= 0
        ring = ndimage.binary_dilation(present, structure=HEX_STRUCTURE) & ~present
        ra, rb = np.nonzero(ring)
        padded = DiscreteDomain(
            dd.mesh,
            np.concatenate((dd.i, ra + dd._origin[0])),
            np.concatenate((dd.j, rb + dd._origin[1])),
        )
        origin = padded._origin
        inner = padded._site_id[dd.i - origin[0], dd.j - origin[1]]
        outside = padded._site_id[ra + dd._origin[0] - origin[0], rb + dd._origin[1] - origin[1]]
        original = np.full(padded.n_sites, -1, dtype=np.int64)
        original[inner] = np.arange(dd.n_sites)

        labels = np.full(padded.n_sites, -1, dtype=np.int64)
        for r in outside:
            around = padded.neighbors[r]
            around = original[around[around >= 0]]
            arcs = {int(a) for a in dd.arc_labels[around[around >= 0]] if a >= 0}
            if arcs:
                labels[r] = _earliest_arc(arcs, dd.n_arcs)

        ring_neighbors = padded.neighbors[inner]
        ring_labels = np.where(ring_neighbors >= 0, labels[ring_neighbors], -1)
        touch = np.zeros((dd.n_sites, dd.n_arcs), dtype=bool)
        for a in range(dd.n_arcs):
            touch[:, a] = (ring_labels == a).any(axis=1)

        f = dd._faces
        pf = padded._faces
        fa, fb = f.base_i - origin[0], f.base_j - origin[1]
        faces = np.where(f.orientation == 0, pf.up_id[fa, fb], pf.down_id[fa, fb])

        self.domain = padded
        self.inner = inner
        self.labels = labels
        self.touch = touch
        self.faces = faces.astype(np.int64)
        for array in (self.inner, self.labels, self.touch, self.faces):
            array.flags.writeable = False

    def walls(self, *arcs: int) -> np.ndarray:
        """Flags of the padded sites of the ring lying on any of `arcs`."""
        return np.isin(self.labels, arcs)

    def faces_touching(self, arc: int) -> np.ndarray:
        """Flags of the padded faces with a corner on the ring part of `arc`."""
        return (self.labels[self.domain.face_corners] == arc).any(axis=1)


def _earliest_arc(arcs: set[int], n_arcs: int) -> int:
    opening = [a for a in arcs if (a - 1) % n_arcs not in arcs]
    return opening[0] if len(opening) == 1 else min(arcs)


def discretize(spec: DomainSpec, mesh: float) -> DiscreteDomain:
    """Sites contained in the open domain or having a neighbor there, with ccw arc labels."""
    spec.validate()
    if mesh <= 0:
        raise InvalidSpec("Mesh must be positive.")
    shape = spec.shape(mesh)
    if spec.kind == DomainKind.RHOMBUS:
        n, m = spec.block
        grid_i, grid_j = np.meshgrid(np.arange(n), np.arange(m), indexing="ij")
        i, j = grid_i.ravel(), grid_j.ravel()
    else:
        i_min, i_max, j_min, j_max = axial_bounds(shape.bounding_box(), mesh, 2 * mesh)
        grid_i, grid_j = np.meshgrid(
            np.arange(i_min, i_max + 1), np.arange(j_min, j_max + 1), indexing="ij"
        )
        inside = shape.contains(_positions(grid_i, grid_j, mesh))
        if not inside.any():
            raise MeshTooCoarse(f"No lattice site lies inside the domain at mesh {mesh}.")
        mask = inside | ndimage.binary_dilation(inside, structure=HEX_STRUCTURE)
        i, j = grid_i[mask], grid_j[mask]

    bare = DiscreteDomain(mesh, i, j, spec=spec, shape=shape)
    params = spec.boundary_parameters()
    arcs, marked = _label_arcs(bare, shape, params)
    dd = DiscreteDomain(mesh, bare.i, bare.j, arcs, marked, spec, shape, params)
    logger.debug(
        f"Discretized {spec.kind.value} at mesh {mesh}: {dd.n_sites} sites, "
        f"{int(dd.is_boundary.sum())} boundary sites."
    )
    return dd


def _label_arcs(
    dd: DiscreteDomain, shape: Shape, params: Sequence[float]
) -> tuple[np.ndarray, list[int]]:
    boundary = np.flatnonzero(dd.is_boundary)
    t, _ = shape.project(dd.positions[boundary])
    order = np.lexsort((dd.j[boundary], dd.i[boundary], t))
    cycle = boundary[order]
    cycle_t = t[order]
    nb = cycle.size

    targets = shape.point_at(np.array(params))
    marked_positions = []
    for param, target in zip(params, targets):
        distance = np.abs(dd.positions[cycle] - target)
        tied = np.flatnonzero(distance <= distance.min() + 1e-9 * dd.mesh)
        # ties go counter-clockwise
        ahead = np.mod(cycle_t[tied] - param, 1.0)
        marked_positions.append(int(tied[np.argmin(ahead)]))

    if len(set(marked_positions)) != len(marked_positions):
        raise MeshTooCoarse("Two marked points snap to the same boundary site.")
    relative = [(p - marked_positions[0]) % nb for p in marked_positions]
    if any(b <= a for a, b in zip(relative, relative[1:])):
        raise MeshTooCoarse("Snapped marked sites do not keep the counter-clockwise order.")

    arcs = np.full(dd.n_sites, -1, dtype=np.int64)
    count = len(marked_positions)
    for a in range(count):
        start, stop = marked_positions[a], marked_positions[(a + 1) % count]
        length = (stop - start) % nb
        if length < 2:
            raise MeshTooCoarse(f"Arc {a} receives fewer than 2 boundary sites at mesh {dd.mesh}.")
        arcs[cycle[(start + np.arange(length)) % nb]] = a
    return arcs, [int(cycle[p]) for p in marked_positions]


def face_adjacency(dd: DiscreteDomain, v: DualVertex) -> list[tuple[DualVertex, tuple[SiteCoord, SiteCoord]]]:
    """Dual neighbors of a face, each with the lattice edge separating the two faces."""
    f = dd.face_index(v)
    edges = dd.face_edges
    rows = np.flatnonzero((edges[:, 0] == f) | (edges[:, 1] == f))
    result = []
    for row in rows:
        fa, fb, p, q = (int(x) for x in edges[row])
        other = fb if fa == f else fa
        result.append((dd.face(other), (dd.site(p), dd.site(q))))
    return result


def annular_sector_domain(
    mesh: float,
    inner_radius: float,
    outer_radius: float,
    angle: float,
    center: complex = 0j,
    start_angle: float = 0.0,
) -> DiscreteDomain:
    """Sites whose centers lie in the closed annular sector; no arcs or marked points."""
    pad = 2 * mesh
    box = (
        center.real - outer_radius,
        center.real + outer_radius,
        center.imag - outer_radius,
        center.imag + outer_radius,
    )
    i_min, i_max, j_min, j_max = axial_bounds(box, mesh, pad)
    grid_i, grid_j = np.meshgrid(np.arange(i_min, i_max + 1), np.arange(j_min, j_max + 1), indexing="ij")
    mask = in_closed_sector(_positions(grid_i, grid_j, mesh), inner_radius, outer_radius, angle, center, start_angle)
    if not mask.any():
        raise MeshTooCoarse("The annular sector contains no lattice site.")
    return DiscreteDomain(mesh, grid_i[mask], grid_j[mask])


def in_closed_sector(
    z: np.ndarray,
    inner_radius: float,
    outer_radius: float,
    angle: float,
    center: complex = 0j,
    start_angle: float = 0.0,
) -> np.ndarray:
    eps = 1e-12 * max(outer_radius, 1.0)
    w = np.asarray(z) - center
    modulus = np.abs(w)
    ok = (modulus >= inner_radius - eps) & (modulus <= outer_radius + eps)
    if angle >= 2 * np.pi - 1e-12:
        return ok
    relative = np.mod(np.angle(w) - start_angle + 1e-12, 2 * np.pi) - 1e-12
    return ok & (relative <= angle + 1e-12)
