"""Conformal maps of the catalog domains.

Every map is a chain of primitive stages. The first stages carry a catalog domain onto the
upper half-plane H, a Möbius stage moves the images of the marked points to 0, 1 and ∞,
and the Schwarz–Christoffel stage lands in T_unit (vertices 0, 1, e^{iπ/3}). Maps into the
triangle T with vertices 1, τ, τ² finish with the similarity A(w) = τ² + (1 − τ²)w, which
sends 0, 1, e^{iπ/3} to τ², 1, τ.
"""

from __future__ import annotations
import abc
import dataclasses
import math

import mpmath
import numpy as np
from scipy import optimize, special

from cardy_lab.conformal.special import (
    APEX,
    SMALL_ANNULUS_LIMIT,
    apply_mobius,
    cardy_probability,
    sc_half_plane_to_triangle,
    sc_triangle_to_half_plane,
    three_point_mobius,
)
from cardy_lab.lattice.shapes import DomainKind, DomainSpec, Shape
from cardy_lab.models.exceptions import OutOfDomain, OutOfRange, UnsupportedDomain, WrongMarkedPointCount
from cardy_lab.models.structures import TAU, TRIANGLE_VERTICES


_INFINITY = complex(np.inf, 0.0)
_ARG_SLACK = 1e-12
_EPS = np.finfo(float).eps
MAP_TOLERANCE = 1e-8
UNIT_TRIANGLE = (0j, 1 + 0j, APEX)
TO_T = (1 - TAU**2, TAU**2)


class _Stage(abc.ABC):
    name = ""

    @abc.abstractmethod
    def apply(self, z: np.ndarray) -> np.ndarray:
        pass


@dataclasses.dataclass(frozen=True)
class AffineStage(_Stage):
    a: complex
    b: complex = 0j
    name = "affine"

    def apply(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(invalid="ignore"):
            return np.where(np.isinf(z), _INFINITY, self.a * z + self.b)


@dataclasses.dataclass(frozen=True)
class LogStage(_Stage):
    """Principal logarithm of points in the closed upper half-plane."""

    name = "log"

    def apply(self, z):
        z = np.asarray(z, dtype=complex)
        # -0.0 imaginary parts on the negative axis would give arg -π
        upper = z.real + 1j * np.where(z.imag > 0, z.imag, 0.0)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(upper)) + 1j * np.angle(upper)


@dataclasses.dataclass(frozen=True, eq=False)
class MobiusStage(_Stage):
    matrix: np.ndarray
    name = "mobius"

    def apply(self, z):
        return apply_mobius(self.matrix, z)


@dataclasses.dataclass(frozen=True)
class PowerStage(_Stage):
    """z ↦ |z|^p e^{i p arg z} with arg z ∈ [0, 2π), so 0 ↦ 0 and the positive axis is fixed."""

    p: float
    name = "power"

    def apply(self, z):
        z = np.asarray(z, dtype=complex)
        arg = np.angle(z)
        arg = np.where(arg < -_ARG_SLACK, arg + 2 * math.pi, np.maximum(arg, 0.0))
        with np.errstate(invalid="ignore", over="ignore"):
            value = np.abs(z) ** self.p * np.exp(1j * self.p * arg)
        return np.where(np.isinf(z), _INFINITY, value)


@dataclasses.dataclass(frozen=True)
class SnStage(_Stage):
    """Jacobi sn(u | m) for complex u, from the real-argument functions by the addition formula.

    sn maps the rectangle [-K, K] × [0, K'] onto H with -K, K, K + iK', -K + iK' going to
    -1, 1, 1/k, -1/k. `m1` = 1 - m is kept separately for moduli close to 1.
    """

    m: float
    m1: float
    name = "sn"

    def apply(self, u):
        u = np.asarray(u, dtype=complex)
        s, c, d, _ = special.ellipj(u.real, self.m)
        s1, c1, d1, _ = special.ellipj(u.imag, self.m1)
        denominator = c1**2 + self.m * s**2 * s1**2
        numerator = s * d1 + 1j * c * d * s1 * c1
        with np.errstate(divide="ignore", invalid="ignore"):
            value = numerator / np.where(denominator == 0, 1.0, denominator)
        return np.where(denominator == 0, _INFINITY, value)


@dataclasses.dataclass(frozen=True)
class TriangleStage(_Stage):
    """Schwarz–Christoffel map H → T_unit."""

    name = "schwarz_christoffel"

    def apply(self, z):
        return np.asarray(sc_half_plane_to_triangle(np.asarray(z, dtype=complex)))


@dataclasses.dataclass(frozen=True)
class InverseTriangleStage(_Stage):
    """T → H: the inverse of A∘F."""

    name = "inverse_schwarz_christoffel"

    def apply(self, z):
        a, b = TO_T
        return np.asarray(sc_triangle_to_half_plane((np.asarray(z, dtype=complex) - b) / a))


def compose(stages, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    for stage in stages:
        z = stage.apply(z)
    return z


@dataclasses.dataclass(frozen=True, eq=False)
class MapDescriptor:
    """A conformal map as its stages, with the marked points and their prescribed images."""

    stages: tuple[_Stage, ...]
    marked_correspondence: tuple[tuple[complex, complex], ...]
    shape: Shape | None = None

    def evaluate(self, z, check: bool = False):
        """Image of `z` (scalar or array); `check` rejects points outside the closed domain."""
        scalar = np.ndim(z) == 0
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if check and self.shape is not None and not np.all(self.shape.contains_closed(z)):
            raise OutOfDomain("Point lies outside the closed domain of the map.")
        value = compose(self.stages, z)
        return complex(value[0]) if scalar else value

    def __call__(self, z):
        return self.evaluate(z)

    def marked_error(self) -> float:
        """Largest distance between a marked point's image and its prescribed vertex."""
        points = np.array([p for p, _ in self.marked_correspondence])
        targets = np.array([t for _, t in self.marked_correspondence])
        return float(np.max(np.abs(self.evaluate(points) - targets)))

    def describe(self) -> list[str]:
        return [stage.name for stage in self.stages]


# rectangle parameters


def rectangle_modulus(aspect: float) -> tuple[float, float]:
    """(m, 1 - m) with 2K(m)/K(1 - m) = aspect, i.e. the sn rectangle [-K, K] × [0, K']
    has the given width over height."""
    if not 0.01 <= aspect <= 400:
        raise OutOfRange(f"Rectangle aspect must lie in [0.01, 400], got {aspect}.")
    if aspect >= 2:
        q = optimize.brentq(
            lambda q: 2 * special.ellipkm1(q) / special.ellipk(q) - aspect, 1e-300, 0.5, xtol=1e-300, rtol=4 * _EPS
        )
        return 1 - q, q
    m = optimize.brentq(
        lambda m: 2 * special.ellipk(m) / special.ellipkm1(m) - aspect, 1e-300, 0.5, xtol=1e-300, rtol=4 * _EPS
    )
    return m, 1 - m


def quarter_periods(m: float, m1: float) -> tuple[float, float]:
    """(K, K') evaluated from whichever of m, 1 - m is the small one."""
    big_k = special.ellipkm1(m1) if m1 < 0.5 else special.ellipk(m)
    small_k = special.ellipk(m1) if m1 <= 0.5 else special.ellipkm1(m)
    return float(big_k), float(small_k)


def rectangle_stages(width: float, height: float) -> list[_Stage]:
    """[0, width] × [0, height] → H, corners (0, 0), (width, 0), (width, height), (0, height)
    going to -1, 1, 1/k, -1/k."""
    m, m1 = rectangle_modulus(width / height)
    big_k, _ = quarter_periods(m, m1)
    return [AffineStage(2 * big_k / width, -big_k), SnStage(m, m1)]


def sn_mpmath(u: complex, m: float) -> complex:
    """sn(u | m) from mpmath's Jacobi functions."""
    return complex(mpmath.ellipfun("sn", u, m=m))


def rectangle_cross_ratio(aspect: float) -> float:
    """Cross-ratio of the corners of a width/height = aspect rectangle from theta constants.

    With the sides of height as the arcs, the cross-ratio is the modulus squared at nome
    e^{-π·aspect}, (θ₂/θ₃)⁴.
    """
    q = mpmath.exp(-mpmath.pi * aspect)
    return float((mpmath.jtheta(2, 0, q) / mpmath.jtheta(3, 0, q)) ** 4)


# routes onto the half-plane


def half_plane_stages(spec: DomainSpec) -> list[_Stage]:
    """Stages carrying the domain onto H, its boundary traversed in increasing real order."""
    kind = spec.kind
    if kind == DomainKind.EQUILATERAL_TRIANGLE:
        return [AffineStage(math.sqrt(3) / spec.size), InverseTriangleStage()]
    if kind == DomainKind.RECTANGLE:
        return rectangle_stages(spec.aspect * spec.size, spec.size)
    if kind == DomainKind.HALF_DISK:
        return [AffineStage(1 / spec.size), *_half_disk_stages()]
    if kind == DomainKind.SECTOR:
        return [AffineStage(1 / spec.size), PowerStage(math.pi / spec.angle), *_half_disk_stages()]
    if kind == DomainKind.DISK:
        return [MobiusStage(np.array([[1j, 1j * spec.size], [-1, spec.size]], dtype=complex))]
    if kind == DomainKind.HALF_ANNULUS:
        r, big = spec.inner_radius, spec.size
        return [LogStage(), AffineStage(1, -math.log(r)), *rectangle_stages(math.log(big / r), math.pi)]
    raise UnsupportedDomain(f"No conformal map is available for the {kind.value} domain.")


def _half_disk_stages() -> list[_Stage]:
    # unit upper half-disk → first quadrant → H
    return [MobiusStage(np.array([[1, 1], [-1, 1]], dtype=complex)), PowerStage(2.0)]


def _marked_images(spec: DomainSpec, stages) -> tuple[np.ndarray, np.ndarray]:
    spec.validate()
    points = spec.marked_positions()
    return points, compose(stages, points)


def _vertex_marks(spec: DomainSpec) -> bool:
    return spec.kind == DomainKind.EQUILATERAL_TRIANGLE and np.allclose(
        spec.boundary_parameters(), (0.0, 1 / 3, 2 / 3), atol=1e-12
    )


def triangle_map(spec: DomainSpec) -> MapDescriptor:
    """φ: Ω → T sending the three marked points to 1, τ, τ²."""
    if len(spec.boundary_parameters()) != 3:
        raise WrongMarkedPointCount("The triangle map needs 3 marked points.")
    if _vertex_marks(spec):
        spec.validate()
        stages = (AffineStage(math.sqrt(3) / spec.size),)
        points = spec.marked_positions()
    else:
        route = half_plane_stages(spec)
        points, h = _marked_images(spec, route)
        stages = (*route, MobiusStage(three_point_mobius(h[2], h[0], h[1])), TriangleStage(), AffineStage(*TO_T))
    return MapDescriptor(stages, tuple(zip(points, TRIANGLE_VERTICES)), spec.shape())


def _four_point_images(spec: DomainSpec) -> np.ndarray:
    if len(spec.boundary_parameters()) != 4:
        raise WrongMarkedPointCount("The cross-ratio needs 4 marked points.")
    _, h = _marked_images(spec, half_plane_stages(spec))
    return h


def _normalized_fourth(h: np.ndarray) -> float:
    """Image of D under the Möbius map sending A, B, C to 0, 1, ∞; negative for ordered marks."""
    value = complex(apply_mobius(three_point_mobius(h[0], h[1], h[2]), h[3]))
    return value.real


def cross_ratio(spec: DomainSpec) -> float:
    """Conformal cross-ratio of the four marked points; the AB ↔ CD crossing increases with it."""
    lam = _normalized_fourth(_four_point_images(spec))
    m = 1 / (1 - lam)
    if not 0 < m < 1:
        raise OutOfRange(f"Marked points give the degenerate cross-ratio {m}.")
    return m


def crossing_limit(spec: DomainSpec) -> float:
    return cardy_probability(cross_ratio(spec))


def carleson_probability(spec: DomainSpec) -> float:
    """Crossing limit in the triangle form: with A, B, C sent to 0, 1, e^{iπ/3}, the distance
    from e^{iπ/3} to the image of D on the side joining e^{iπ/3} and 0."""
    lam = _normalized_fourth(_four_point_images(spec))
    return abs(complex(sc_half_plane_to_triangle(complex(lam, 0.0))) - APEX)


# half-annuli


def half_annulus_descriptor(inner: float, outer: float) -> MapDescriptor:
    """φ_{r,R}: the half-annulus onto T_unit with -R, -r, R going to e^{iπ/3}, 0, 1."""
    if not 0 < inner < outer:
        raise OutOfRange("Half-annulus radii must satisfy 0 < r < R.")
    spec = DomainSpec.half_annulus(inner, outer, marks=3)
    route = half_plane_stages(spec)
    points, h = _marked_images(spec, route)
    # marks in order R, -R, -r
    stages = (*route, MobiusStage(three_point_mobius(h[2], h[0], h[1])), TriangleStage())
    return MapDescriptor(stages, tuple(zip(points, (1 + 0j, APEX, 0j))), spec.shape())


def half_annulus_map(inner: float, outer: float, z):
    """φ_{r,R}(z) for z in the closed half-annulus."""
    return half_annulus_descriptor(inner, outer).evaluate(z, check=True)


def half_annulus_corner_value(inner: float, outer: float = 1.0) -> float:
    """φ_{r,R}(r) from theta constants: F at the modulus squared for nome r/R."""
    q = mpmath.mpf(inner) / outer
    x = float((mpmath.jtheta(2, 0, q) / mpmath.jtheta(3, 0, q)) ** 4)
    return float(complex(sc_half_plane_to_triangle(complex(x, 0.0))).real)


@dataclasses.dataclass(frozen=True)
class CornerRatioConstants:
    """φ_{r,1}(r)/r^{1/3} over a grid of inner radii.

    φ_{r,1}(r) is the limiting probability that an open path crosses the unit half-annulus
    from radius r to radius 1, so the ratio is the constant in P(S_r ↔ S_1) ≍ r^{1/3}. It
    falls from the small-r limit 3·16^{1/3}/B(1/3, 1/3) ≈ 1.426 to about 1.244 at r = 1/2.
    """

    radii: tuple[float, ...]
    ratios: tuple[float, ...]
    small_radius: float
    small_ratio: float
    limit: float

    @property
    def max_ratio(self) -> float:
        return max(self.ratios)

    @property
    def min_ratio(self) -> float:
        return min(self.ratios)

    def as_dict(self) -> dict:
        return {
            "max_ratio": self.max_ratio,
            "min_ratio": self.min_ratio,
            "small_radius": self.small_radius,
            "small_ratio": self.small_ratio,
            "limit": self.limit,
            "radii": list(self.radii),
            "ratios": list(self.ratios),
        }


def corner_ratio(inner: float) -> float:
    """φ_{r,1}(r)/r^{1/3} for the inner radius r."""
    return complex(half_annulus_map(inner, 1.0, inner)).real / inner ** (1 / 3)


def corner_ratio_constants(radii=None, small_radius: float = 1e-4) -> CornerRatioConstants:
    """The corner ratio on 40 radii from 10⁻³ to 1/2 unless `radii` are given, with its value
    at `small_radius` next to the small-r limit."""
    radii = np.geomspace(1e-3, 0.5, 40) if radii is None else np.asarray(radii, dtype=float)
    ratios = tuple(corner_ratio(float(r)) for r in radii)
    return CornerRatioConstants(
        radii=tuple(float(r) for r in radii),
        ratios=ratios,
        small_radius=small_radius,
        small_ratio=corner_ratio(small_radius),
        limit=SMALL_ANNULUS_LIMIT,
    )


# numerical conformality checks


def cauchy_riemann_residual(descriptor: MapDescriptor, points, step: float = 1e-6) -> float:
    """max |∂_y φ - i ∂_x φ| / |∂_x φ| by central differences at the given interior points."""
    z = np.asarray(points, dtype=complex)
    dx = (descriptor.evaluate(z + step) - descriptor.evaluate(z - step)) / (2 * step)
    dy = (descriptor.evaluate(z + 1j * step) - descriptor.evaluate(z - 1j * step)) / (2 * step)
    return float(np.max(np.abs(dy - 1j * dx) / np.abs(dx)))


def distance_to_triangle_boundary(w, vertices=TRIANGLE_VERTICES) -> np.ndarray:
    w = np.asarray(w, dtype=complex)
    distances = []
    for k in range(3):
        a, b = vertices[k], vertices[(k + 1) % 3]
        t = np.clip(((w - a) * np.conj(b - a)).real / abs(b - a) ** 2, 0.0, 1.0)
        distances.append(np.abs(w - (a + t * (b - a))))
    return np.min(distances, axis=0)
