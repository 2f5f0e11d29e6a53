"""Piecewise-linear extension of dual-vertex values.

Each hexagonal face of the lattice (the cell of one site) is cut into four triangles by a
fan from its lexicographically smallest dual vertex; on every triangle the value is the
linear interpolation of the three corner values. The smallest vertex of the ring around
site (i, j) is always the down face based at (i-1, j-1), the fourth entry of
`DiscreteDomain.hexagon_faces`.
"""

import functools

import numpy as np
from scipy.spatial import cKDTree

from cardy_lab.lattice.domain import DiscreteDomain
from cardy_lab.models.exceptions import BoundaryFace, OutsideCoveredRegion
from cardy_lab.models.structures import SQRT3, TAU


_FAN_START = 3
LAMBDA = complex(0.5, 0.5 / SQRT3)


@functools.lru_cache(maxsize=16)
def _site_tree(dd: DiscreteDomain) -> cKDTree:
    return cKDTree(np.column_stack((dd.positions.real, dd.positions.imag)))


def fan_ring(dd: DiscreteDomain) -> np.ndarray:
    """Hexagon rings rotated so that the fan vertex comes first."""
    return np.roll(dd.hexagon_faces, -_FAN_START, axis=1)


def covered_sites(dd: DiscreteDomain) -> np.ndarray:
    """Sites whose hexagon has all six dual vertices in the domain."""
    return np.all(dd.hexagon_faces >= 0, axis=1)


def interpolate(dd: DiscreteDomain, values: np.ndarray, points) -> np.ndarray | complex:
    """Value of the fan-triangulated interpolation of per-face `values` at `points`."""
    scalar = np.ndim(points) == 0
    z = np.atleast_1d(np.asarray(points, dtype=complex))
    values = np.asarray(values)
    # points on hexagon edges are equally near to up to three sites
    nearest = list(range(1, min(3, dd.n_sites) + 1))
    distance, candidates = _site_tree(dd).query(np.column_stack((z.real, z.imag)), k=nearest)
    # a hexagon's circumradius is mesh/√3
    within = distance <= dd.mesh / SQRT3 * (1 + 1e-9)
    if not np.all(within[:, 0]):
        raise OutsideCoveredRegion("Point lies outside every hexagon of the domain.")
    usable = within & covered_sites(dd)[candidates]
    if not np.all(usable.any(axis=1)):
        raise OutsideCoveredRegion("Point lies in a hexagon with missing dual vertices.")
    site = candidates[np.arange(z.size), np.argmax(usable, axis=1)]
    ring = fan_ring(dd)[site]

    corners = dd.face_positions[ring]
    corner_values = values[ring]
    result = np.full(z.size, np.nan, dtype=np.result_type(values.dtype, float))
    done = np.zeros(z.size, dtype=bool)
    for k in range(1, 5):
        a, b, c = corners[:, 0], corners[:, k], corners[:, k + 1]
        la, lb, lc = _barycentric(z, a, b, c)
        inside = ~done & (la >= -1e-9) & (lb >= -1e-9) & (lc >= -1e-9)
        result[inside] = (
            la[inside] * corner_values[inside, 0]
            + lb[inside] * corner_values[inside, k]
            + lc[inside] * corner_values[inside, k + 1]
        )
        done |= inside
    if not done.all():
        raise OutsideCoveredRegion("Point is not covered by the triangulated hexagons.")
    return result[0] if scalar else result


def _barycentric(z, a, b, c):
    def cross(u, v):
        return (u.conjugate() * v).imag

    area = cross(b - a, c - a)
    lb = cross(z - a, c - a) / area
    lc = cross(b - a, z - a) / area
    return 1 - lb - lc, lb, lc


def neighbor_directions(dd: DiscreteDomain, face: int) -> dict[int, int]:
    """Neighbor faces keyed by direction index 0..5 (multiples of 60° starting at 30°)."""
    edges = dd.face_edges
    rows = np.flatnonzero((edges[:, 0] == face) | (edges[:, 1] == face))
    result = {}
    for row in rows:
        other = int(edges[row, 1] if edges[row, 0] == face else edges[row, 0])
        step = dd.face_positions[other] - dd.face_positions[face]
        result[int(round((np.angle(step) - np.pi / 6) / (np.pi / 3))) % 6] = other
    return result


def discrete_dbar(dd: DiscreteDomain, values: np.ndarray, face: int) -> complex:
    """λ(∂_η − τ⁻¹∂_{τη}) of the field at an interior dual vertex.

    ∂_η is the difference quotient along the step η to a neighbor, divided by |η|; η is the
    neighbor step of smallest direction angle and τη the step rotated by 2π/3.
    """
    if dd.face_degree[face] < 3:
        raise BoundaryFace(f"Dual vertex {dd.face(face)} lacks a neighbor across one of its edges.")
    neighbors = neighbor_directions(dd, face)
    first = min(neighbors)
    eta, rotated = neighbors[first], neighbors[(first + 2) % 6]
    step = abs(dd.face_positions[eta] - dd.face_positions[face])
    d_eta = (values[eta] - values[face]) / step
    d_rotated = (values[rotated] - values[face]) / step
    return LAMBDA * (d_eta - d_rotated / TAU)


def mean_dbar(dd: DiscreteDomain, values: np.ndarray) -> float:
    """Average |∂̄| over the interior dual vertices."""
    interior = np.flatnonzero(dd.face_degree == 3)
    if interior.size == 0:
        raise BoundaryFace("The domain has no interior dual vertex.")
    return float(np.mean([abs(discrete_dbar(dd, values, int(f))) for f in interior]))
