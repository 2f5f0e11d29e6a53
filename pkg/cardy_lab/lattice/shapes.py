"""Catalog of continuum domains.

Every domain boundary is a closed chain of line and circle-arc segments traversed
counter-clockwise. Boundary points are addressed by the normalized arc-length parameter
t ∈ [0, 1) measured from the chain's starting point.
"""

from __future__ import annotations
import dataclasses
import functools
import math
from enum import Enum
from typing import Callable, NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from cardy_lab.models.exceptions import InvalidSpec
from cardy_lab.models.structures import SQRT3, TAU


class DomainKind(str, Enum):
    EQUILATERAL_TRIANGLE = "equilateral_triangle"
    RECTANGLE = "rectangle"
    HALF_DISK = "half_disk"
    HALF_ANNULUS = "half_annulus"
    SECTOR = "sector"
    DISK = "disk"
    RHOMBUS = "rhombus"


_E60 = complex(0.5, SQRT3 / 2)
_ANGLE_TOL = 1e-9


@dataclasses.dataclass(frozen=True)
class _Segment:
    """A line segment, or a circle arc when `center` is given (signed `sweep` in radians)."""

    start: complex
    end: complex
    center: complex | None = None
    sweep: float = 0.0

    @property
    def length(self) -> float:
        if self.center is None:
            return abs(self.end - self.start)
        return abs(self.start - self.center) * abs(self.sweep)

    def points(self, s: np.ndarray) -> np.ndarray:
        if self.center is None:
            return self.start + s * (self.end - self.start)
        radius = abs(self.start - self.center)
        theta0 = np.angle(self.start - self.center)
        return self.center + radius * np.exp(1j * (theta0 + s * self.sweep))

    def tangent(self, s: float) -> complex:
        if self.center is None:
            d = self.end - self.start
            return d / abs(d)
        theta = np.angle(self.start - self.center) + s * self.sweep
        return complex(1j * np.exp(1j * theta) * math.copysign(1.0, self.sweep))


def _line(a: complex, b: complex) -> _Segment:
    return _Segment(complex(a), complex(b))


def _arc(center: complex, radius: float, theta0: float, theta1: float) -> _Segment:
    return _Segment(
        complex(center + radius * np.exp(1j * theta0)),
        complex(center + radius * np.exp(1j * theta1)),
        complex(center),
        theta1 - theta0,
    )


class Corner(NamedTuple):
    t: float
    angle: float
    position: complex


class Shape:
    """Counter-clockwise boundary chain together with an open-interior predicate."""

    def __init__(
        self,
        segments: list[_Segment],
        contains: Callable[[np.ndarray, float], np.ndarray],
        scale: float,
    ) -> None:
        self._segments = segments
        self._contains = contains
        self._scale = scale
        lengths = np.array([s.length for s in segments])
        self._perimeter = float(lengths.sum())
        self._cumulative = np.concatenate(([0.0], np.cumsum(lengths))) / self._perimeter

    @property
    def perimeter(self) -> float:
        return self._perimeter

    @property
    def scale(self) -> float:
        return self._scale

    def contains(self, z: np.ndarray | complex) -> np.ndarray:
        """True for points of the open domain, with a margin relative to the domain size."""
        return self._contains(np.asarray(z, dtype=complex), 1e-9 * self._scale)

    def contains_closed(self, z: np.ndarray | complex, tolerance: float = 1e-9) -> np.ndarray:
        return self._contains(np.asarray(z, dtype=complex), -tolerance * self._scale)

    def point_at(self, t: np.ndarray | float) -> np.ndarray:
        t = np.mod(np.asarray(t, dtype=float), 1.0)
        index = np.clip(np.searchsorted(self._cumulative, t, side="right") - 1, 0, len(self._segments) - 1)
        out = np.empty(t.shape, dtype=complex)
        for k, segment in enumerate(self._segments):
            mask = index == k
            if np.any(mask):
                span = self._cumulative[k + 1] - self._cumulative[k]
                out[mask] = segment.points((t[mask] - self._cumulative[k]) / span)
        return out

    def corners(self) -> list[Corner]:
        """Junctions where the boundary turns, with their interior angles."""
        result = []
        n = len(self._segments)
        for k in range(n):
            incoming = self._segments[k - 1].tangent(1.0)
            outgoing = self._segments[k].tangent(0.0)
            turn = float(np.angle(outgoing / incoming))
            if abs(turn) > _ANGLE_TOL:
                angle = math.pi - turn
                result.append(Corner(float(self._cumulative[k]), angle, self._segments[k].start))
        return result

    def sample(self, count: int) -> tuple[np.ndarray, np.ndarray]:
        t = np.arange(count) / count
        return t, self.point_at(t)

    @functools.cached_property
    def _projection_tree(self) -> tuple[cKDTree, np.ndarray]:
        t, points = self.sample(200_000)
        return cKDTree(np.column_stack((points.real, points.imag))), t

    def project(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Nearest boundary parameter and distance to the boundary of each point."""
        tree, t = self._projection_tree
        z = np.asarray(z, dtype=complex)
        distance, index = tree.query(np.column_stack((z.real, z.imag)))
        return t[index], distance

    def bounding_box(self) -> tuple[float, float, float, float]:
        _, points = self.sample(4096)
        return points.real.min(), points.real.max(), points.imag.min(), points.imag.max()


class CornerAngles(NamedTuple):
    """Interior angles at marked points (2πα_i) and at unmarked corners (2πβ_j)."""

    marked: tuple[float, ...]
    unmarked: tuple[float, ...]


@dataclasses.dataclass(frozen=True)
class DomainSpec:
    """A catalog domain with marked boundary points.

    `size` is the triangle side, the rectangle height, or the (outer) radius. The rhombus
    is a lattice-aligned block of `block` = (n, m) sites whose size follows the mesh.
    Empty `marked_points` selects the kind's default marks, `marks` of them.
    """

    kind: DomainKind
    size: float = 1.0
    aspect: float = 1.0
    inner_radius: float = 0.5
    angle: float = math.pi
    block: tuple[int, int] = (3, 3)
    marked_points: tuple[float, ...] = ()
    marks: int = 3

    @staticmethod
    def triangle(side: float = 1.0, marked_points: tuple[float, ...] = ()) -> DomainSpec:
        return DomainSpec(DomainKind.EQUILATERAL_TRIANGLE, size=side, marked_points=tuple(marked_points))

    @staticmethod
    def rectangle(aspect: float = 1.0, height: float = 1.0, midpoints: bool = False) -> DomainSpec:
        """Rectangle [0, aspect·height] × [0, height]; the boundary starts at the top-left
        corner, so with corner marks the arcs AB and CD are the left and right sides.
        """
        spec = DomainSpec(DomainKind.RECTANGLE, size=height, aspect=aspect, marks=4)
        if midpoints:
            w, h = aspect * height, height
            p = 2 * (w + h)
            marks = (h / 2 / p, (h + w / 2) / p, (1.5 * h + w) / p, (2 * h + 1.5 * w) / p)
            spec = dataclasses.replace(spec, marked_points=marks)
        return spec

    @staticmethod
    def half_disk(radius: float = 1.0, marks: int = 3) -> DomainSpec:
        return DomainSpec(DomainKind.HALF_DISK, size=radius, marks=marks)

    @staticmethod
    def half_annulus(inner: float = 0.5, outer: float = 1.0, marks: int = 3) -> DomainSpec:
        return DomainSpec(DomainKind.HALF_ANNULUS, size=outer, inner_radius=inner, marks=marks)

    @staticmethod
    def sector(angle: float, radius: float = 1.0, marks: int = 3) -> DomainSpec:
        return DomainSpec(DomainKind.SECTOR, size=radius, angle=angle, marks=marks)

    @staticmethod
    def disk(radius: float = 1.0, marks: int = 3) -> DomainSpec:
        return DomainSpec(DomainKind.DISK, size=radius, marks=marks)

    @staticmethod
    def rhombus(n: int = 3, m: int = 3) -> DomainSpec:
        return DomainSpec(DomainKind.RHOMBUS, block=(n, m), marks=4)

    def validate(self) -> None:
        if self.size <= 0 or self.aspect <= 0:
            raise InvalidSpec("Domain size and aspect must be positive.")
        if self.kind == DomainKind.HALF_ANNULUS and not 0 < self.inner_radius < self.size:
            raise InvalidSpec("Half-annulus radii must satisfy 0 < r < R.")
        if self.kind == DomainKind.SECTOR and not 0 < self.angle < 2 * math.pi:
            raise InvalidSpec("Sector angle must lie in (0, 2π); use a disk for the full turn.")
        if self.kind == DomainKind.RHOMBUS and min(self.block) < 2:
            raise InvalidSpec("Rhombus block needs at least 2 sites per side.")
        params = self.boundary_parameters()
        if len(params) not in (3, 4):
            raise InvalidSpec("A domain needs 3 or 4 marked points.")
        if any(not 0 <= t < 1 for t in params):
            raise InvalidSpec("Marked point parameters must lie in [0, 1).")
        if any(b <= a for a, b in zip(params, params[1:])):
            raise InvalidSpec("Marked points must be distinct and in counter-clockwise order.")

    def boundary_parameters(self) -> tuple[float, ...]:
        if self.marked_points:
            return tuple(self.marked_points)
        return _default_marks(self)

    def shape(self, mesh: float = 1.0) -> Shape:
        return _build_shape(self, mesh)

    def marked_positions(self, mesh: float = 1.0) -> np.ndarray:
        return self.shape(mesh).point_at(np.array(self.boundary_parameters()))

    def corner_angles(self, mesh: float = 1.0) -> CornerAngles:
        corners = self.shape(mesh).corners()
        marked = []
        for t in self.boundary_parameters():
            hits = [c for c in corners if abs((c.t - t + 0.5) % 1.0 - 0.5) < 1e-9]
            marked.append(hits[0].angle if hits else math.pi)
            corners = [c for c in corners if c not in hits]
        return CornerAngles(tuple(marked), tuple(c.angle for c in corners))

    def area(self) -> float:
        if self.kind == DomainKind.EQUILATERAL_TRIANGLE:
            return SQRT3 / 4 * self.size**2
        if self.kind == DomainKind.RECTANGLE:
            return self.aspect * self.size**2
        if self.kind == DomainKind.HALF_DISK:
            return math.pi * self.size**2 / 2
        if self.kind == DomainKind.HALF_ANNULUS:
            return math.pi * (self.size**2 - self.inner_radius**2) / 2
        if self.kind == DomainKind.SECTOR:
            return self.angle * self.size**2 / 2
        if self.kind == DomainKind.DISK:
            return math.pi * self.size**2
        raise InvalidSpec("The rhombus area depends on the mesh.")


def predicted_rate_ceiling(spec: DomainSpec) -> float:
    """Upper end of the admissible convergence exponents, min(2/3, 1/(6α_i), 1/(2β_j))."""
    angles = spec.corner_angles()
    bounds = [2 / 3]
    bounds += [1 / (6 * a / (2 * math.pi)) for a in angles.marked]
    bounds += [1 / (2 * b / (2 * math.pi)) for b in angles.unmarked]
    return min(bounds)


def _default_marks(spec: DomainSpec) -> tuple[float, ...]:
    kind, n = spec.kind, spec.marks
    if kind == DomainKind.EQUILATERAL_TRIANGLE:
        return (0.0, 1 / 3, 2 / 3) if n == 3 else (0.0, 1 / 6, 1 / 3, 2 / 3)
    if kind == DomainKind.RECTANGLE:
        w, h = spec.aspect * spec.size, spec.size
        p = 2 * (w + h)
        return (0.0, h / p, (h + w) / p, (2 * h + w) / p)
    if kind == DomainKind.HALF_DISK:
        p = math.pi + 2
        if n == 3:
            return (0.0, math.pi / p, (math.pi + 1) / p)
        return (0.0, math.pi / 2 / p, math.pi / p, (math.pi + 1) / p)
    if kind == DomainKind.HALF_ANNULUS:
        r, big = spec.inner_radius, spec.size
        p = math.pi * (big + r) + 2 * (big - r)
        points = (0.0, math.pi * big / p, (math.pi * big + big - r) / p, (math.pi * (big + r) + big - r) / p)
        return points[:n]
    if kind == DomainKind.SECTOR:
        p = spec.angle + 2
        if n == 3:
            return (1 / p, (1 + spec.angle / 2) / p, (1 + spec.angle) / p)
        return (0.0, 1 / p, (1 + spec.angle / 2) / p, (1 + spec.angle) / p)
    if kind == DomainKind.DISK:
        return tuple(k / n for k in range(n))
    if kind == DomainKind.RHOMBUS:
        n_, m_ = spec.block
        p = 2 * (n_ - 1 + m_ - 1)
        return (0.0, (n_ - 1) / p, (n_ - 1 + m_ - 1) / p, (2 * (n_ - 1) + m_ - 1) / p)
    raise InvalidSpec(f"Unknown domain kind {kind}.")


def _build_shape(spec: DomainSpec, mesh: float) -> Shape:
    kind = spec.kind
    if kind == DomainKind.EQUILATERAL_TRIANGLE:
        rho = spec.size / SQRT3
        vertices = [rho * v for v in (1 + 0j, TAU, TAU * TAU)]
        segments = [_line(vertices[k], vertices[(k + 1) % 3]) for k in range(3)]

        def contains(z, margin):
            inside = np.ones(z.shape, dtype=bool)
            for k in range(3):
                a, b = vertices[k], vertices[(k + 1) % 3]
                cross = ((b - a).conjugate() * (z - a)).imag / abs(b - a)
                inside &= cross > margin
            return inside

        return Shape(segments, contains, spec.size)

    if kind == DomainKind.RECTANGLE:
        w, h = spec.aspect * spec.size, spec.size
        corners = [complex(0, h), 0j, complex(w, 0), complex(w, h)]
        segments = [_line(corners[k], corners[(k + 1) % 4]) for k in range(4)]

        def contains(z, margin):
            return (z.real > margin) & (z.real < w - margin) & (z.imag > margin) & (z.imag < h - margin)

        return Shape(segments, contains, min(w, h))

    if kind == DomainKind.HALF_DISK:
        rho = spec.size
        segments = [_arc(0j, rho, 0.0, math.pi), _line(-rho, rho)]

        def contains(z, margin):
            return (z.imag > margin) & (np.abs(z) < rho - margin)

        return Shape(segments, contains, rho)

    if kind == DomainKind.HALF_ANNULUS:
        r, big = spec.inner_radius, spec.size
        segments = [
            _arc(0j, big, 0.0, math.pi),
            _line(-big, -r),
            _arc(0j, r, math.pi, 0.0),
            _line(r, big),
        ]

        def contains(z, margin):
            modulus = np.abs(z)
            return (z.imag > margin) & (modulus < big - margin) & (modulus > r + margin)

        return Shape(segments, contains, r)

    if kind == DomainKind.SECTOR:
        rho, theta = spec.size, spec.angle
        tip = rho * np.exp(1j * theta)
        segments = [_line(0, rho), _arc(0j, rho, 0.0, theta), _line(tip, 0)]

        def contains(z, margin):
            modulus = np.abs(z)
            arg = np.mod(np.angle(z), 2 * math.pi)
            with np.errstate(divide="ignore", invalid="ignore"):
                slack = margin / modulus
            return (modulus > margin) & (modulus < rho - margin) & (arg > slack) & (arg < theta - slack)

        return Shape(segments, contains, rho)

    if kind == DomainKind.DISK:
        rho = spec.size
        segments = [_arc(0j, rho, 0.0, math.pi), _arc(0j, rho, math.pi, 2 * math.pi)]

        def contains(z, margin):
            return np.abs(z) < rho - margin

        return Shape(segments, contains, rho)

    if kind == DomainKind.RHOMBUS:
        n, m = spec.block
        a, b = (n - 1) * mesh, (m - 1) * mesh
        corners = [0j, complex(a), a + b * _E60, b * _E60]
        segments = [_line(corners[k], corners[(k + 1) % 4]) for k in range(4)]

        def contains(z, margin):
            u = z.real - z.imag / SQRT3
            v = 2 * z.imag / SQRT3
            return (u > margin) & (u < a - margin) & (v > margin) & (v < b - margin)

        return Shape(segments, contains, min(a, b))

    raise InvalidSpec(f"Unknown domain kind {kind}.")
