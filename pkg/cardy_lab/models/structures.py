from __future__ import annotations
import dataclasses
import math
from enum import IntEnum
from typing import NamedTuple


SQRT3 = math.sqrt(3.0)
TAU = complex(-0.5, SQRT3 / 2)  # exp(2πi/3)
TRIANGLE_VERTICES = (1 + 0j, TAU, TAU * TAU)


class Color(IntEnum):
    CLOSED = 0
    OPEN = 1

    def swapped(self) -> Color:
        return Color(1 - self.value)


class Orientation(IntEnum):
    UP = 0
    DOWN = 1


class SiteCoord(NamedTuple):
    """Axial coordinates of a triangular-lattice site."""

    i: int
    j: int

    def position(self, mesh: float = 1.0) -> complex:
        return complex(mesh * (self.i + self.j / 2), mesh * self.j * SQRT3 / 2)

    def neighbors(self) -> list[SiteCoord]:
        return [SiteCoord(self.i + di, self.j + dj) for di, dj in NEIGHBOR_STEPS]

    def is_neighbor(self, other: SiteCoord) -> bool:
        return (other.i - self.i, other.j - self.j) in NEIGHBOR_STEPS


# counter-clockwise, starting east
NEIGHBOR_STEPS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))


class DualVertex(NamedTuple):
    """Barycenter of a triangular face.

    An up face based at (i, j) has corners (i, j), (i+1, j), (i, j+1); a down face has
    corners (i+1, j), (i, j+1), (i+1, j+1).
    """

    base: SiteCoord
    orientation: Orientation

    def corners(self) -> tuple[SiteCoord, SiteCoord, SiteCoord]:
        i, j = self.base
        if self.orientation == Orientation.UP:
            return SiteCoord(i, j), SiteCoord(i + 1, j), SiteCoord(i, j + 1)
        return SiteCoord(i + 1, j), SiteCoord(i, j + 1), SiteCoord(i + 1, j + 1)

    def position(self, mesh: float = 1.0) -> complex:
        return sum((c.position(mesh) for c in self.corners()), 0j) / 3


@dataclasses.dataclass(frozen=True)
class ArmSpec:
    """Annular sector A_θ(r, R) together with the arm pattern looked for in it.

    The sector spans the angles [start_angle, start_angle + angle] around `center`.
    `start_color` is the color of the first arm in counter-clockwise order; None accepts
    either color.
    """

    inner_radius: float
    outer_radius: float
    k: int
    angle: float = math.pi
    center: complex = 0j
    start_angle: float = 0.0
    start_color: Color | None = None

    def __post_init__(self):
        if not 0 < self.inner_radius < self.outer_radius:
            raise ValueError("Arm sector radii must satisfy 0 < r < R.")
        if not 1 <= self.k <= 6:
            raise ValueError("Arm count must lie between 1 and 6.")
        if not 0 < self.angle <= 2 * math.pi + 1e-12:
            raise ValueError("Sector angle must lie in (0, 2π].")

    @property
    def full_turn(self) -> bool:
        return self.angle >= 2 * math.pi - 1e-12


@dataclasses.dataclass(frozen=True)
class FitResult:
    """Power-law fit y ≈ exp(intercept)·x^slope.

    `points` are the (scale, estimate, estimate_stderr) triples used in the fit,
    `excluded` the ones left out by the transient rule.
    """

    slope: float
    intercept: float
    stderr: float
    r_squared: float
    points: tuple[tuple[float, float, float], ...]
    residuals: tuple[float, ...] = ()
    excluded: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        if len(self.points) < 3:
            raise ValueError("A fit needs at least three points.")
        if self.stderr < 0:
            raise ValueError("Standard error of the slope cannot be negative.")

    @property
    def exponent(self) -> float:
        """Decay exponent, i.e. the negated slope."""
        return -self.slope

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "stderr": self.stderr,
            "r_squared": self.r_squared,
            "points": [list(p) for p in self.points],
            "residuals": list(self.residuals),
            "excluded": [list(p) for p in self.excluded],
        }
