"""Elliptic kernel with two simple poles, built from the Weierstrass product.

σ is the product over the lattice Λ = aZ + bZ truncated to |j|, |k| ≤ M. The factors left
out contribute exp(-Σ_{n≥2} ζ^{2n}/(2n) (G_{2n} - W_{2n})), where G_{2n} = Σ_{ω≠0} ω^{-2n} are
the Eisenstein sums of Λ and W_{2n} the same sums over the window; the terms up to n = 6
are restored, the remainder being below double precision for |ζ| well inside the window.
"""

from __future__ import annotations
import dataclasses
import functools

import mpmath
import numpy as np

from cardy_lab.models.exceptions import NearPole, QuadratureFailure
from cardy_lab.models.structures import TAU


DEFAULT_ORDER = 40
DEFAULT_A = complex(3 * (1 - TAU**2))
DEFAULT_B = complex(3 * (TAU - TAU**2))
DEFAULT_P2 = complex(0.4, 0.1)
POLE_GUARD = 1e-12
_TAIL_ORDERS = range(2, 7)
_SERIES_RADIUS = 0.25
_SERIES_TERMS = 40
_ROW_BLOCK = 256


@functools.lru_cache(maxsize=32)
def eisenstein_sums(a: complex, b: complex) -> tuple[complex, ...]:
    """G_4, G_6, ..., G_12 of the lattice aZ + bZ from the theta constants of b/a."""
    ratio = b / a
    if ratio.imag < 0:
        ratio = -ratio
    q = mpmath.exp(1j * mpmath.pi * mpmath.mpc(ratio.real, ratio.imag))
    t2, t3, t4 = (mpmath.jtheta(n, 0, q) ** 4 for n in (2, 3, 4))
    scale = mpmath.pi**2 / 3
    e1, e2, e3 = scale * (t3 + t4), scale * (t2 - t4), -scale * (t2 + t3)
    g2 = 2 * (e1**2 + e2**2 + e3**2)
    g3 = 4 * e1 * e2 * e3
    # Laurent coefficients of ℘: c_n = (2n - 1) G_{2n}
    c = {2: g2 / 20, 3: g3 / 28}
    for n in range(4, 7):
        c[n] = 3 * sum(c[m] * c[n - m] for m in range(2, n - 1)) / ((2 * n + 1) * (n - 3))
    return tuple(complex(c[n] / (2 * n - 1)) * a ** (-2 * n) for n in _TAIL_ORDERS)


@functools.lru_cache(maxsize=32)
def _window(a: complex, b: complex, order: int) -> tuple[np.ndarray, tuple[complex, ...]]:
    j, k = np.meshgrid(np.arange(-order, order + 1), np.arange(-order, order + 1), indexing="ij")
    keep = (j != 0) | (k != 0)
    omega = (a * j + b * k)[keep]
    tails = tuple(g - np.sum(omega ** (-2 * n)) for g, n in zip(eisenstein_sums(a, b), _TAIL_ORDERS))
    return omega, tails


def _log_factor(x: np.ndarray) -> np.ndarray:
    """log(1 - x) + x + x²/2, summed as a series near 0."""
    out = np.empty_like(x)
    small = np.abs(x) < _SERIES_RADIUS
    xs = x[small]
    power = xs * xs
    series = np.zeros_like(xs)
    for n in range(3, _SERIES_TERMS):
        power = power * xs
        series -= power / n
    out[small] = series
    xl = x[~small]
    with np.errstate(divide="ignore", invalid="ignore"):
        out[~small] = np.log(1 - xl) + xl + xl * xl / 2
    return out


def weierstrass_sigma(zeta, a: complex = DEFAULT_A, b: complex = DEFAULT_B, order: int = DEFAULT_ORDER):
    """Truncated Weierstrass product σ(ζ) over |j|, |k| ≤ order, tail-corrected."""
    if order < 1:
        raise ValueError("Truncation order must be at least 1.")
    scalar = np.ndim(zeta) == 0
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    omega, tails = _window(complex(a), complex(b), int(order))
    exponent = np.empty(zeta.shape, dtype=complex)
    flat = zeta.ravel()
    out = exponent.reshape(-1)
    for start in range(0, flat.size, _ROW_BLOCK):
        rows = flat[start : start + _ROW_BLOCK]
        out[start : start + rows.size] = _log_factor(rows[:, None] / omega[None, :]).sum(axis=1)
    for tail, n in zip(tails, _TAIL_ORDERS):
        exponent -= zeta ** (2 * n) / (2 * n) * tail
    with np.errstate(invalid="ignore", over="ignore"):
        value = zeta * np.exp(exponent)
    value = np.where(np.isnan(value), 0j, value)
    return complex(value[0]) if scalar else value


def sigma_plateau(zeta, a: complex = DEFAULT_A, b: complex = DEFAULT_B, start: int = 20, tolerance: float = 1e-9,
                  max_order: int = 640) -> tuple[np.ndarray, int]:
    """σ with the truncation order doubled until successive values agree to `tolerance`."""
    order = start
    previous = weierstrass_sigma(zeta, a, b, order)
    while order < max_order:
        order *= 2
        current = weierstrass_sigma(zeta, a, b, order)
        scale = np.maximum(np.abs(current), np.finfo(float).tiny)
        if np.max(np.abs(current - previous) / scale) < tolerance:
            return current, order
        previous = current
    raise QuadratureFailure(f"Weierstrass product did not settle below order {max_order}.")


@dataclasses.dataclass(frozen=True)
class EllipticKernel:
    """g(ζ) = σ(ζ - (p1 + p2)/2)² / (σ(ζ - p1) σ(ζ - p2)), elliptic for the lattice aZ + bZ
    with simple poles at p1 and p2 and a double zero at their midpoint."""

    a: complex = DEFAULT_A
    b: complex = DEFAULT_B
    p1: complex = 0j
    p2: complex = DEFAULT_P2
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        if abs((self.b / self.a).imag) < 1e-12:
            raise ValueError("Periods must be linearly independent over the reals.")
        if self.order < 1:
            raise ValueError("Truncation order must be at least 1.")
        if self._lattice_distance(np.array([self.p2 - self.p1]))[0] < POLE_GUARD:
            raise ValueError("Poles must be distinct modulo the period lattice.")

    @property
    def midpoint(self) -> complex:
        return (self.p1 + self.p2) / 2

    def _lattice_distance(self, delta: np.ndarray) -> np.ndarray:
        """Distance from each point to the nearest point of aZ + bZ."""
        basis = np.array([[self.a.real, self.b.real], [self.a.imag, self.b.imag]])
        coords = np.linalg.solve(basis, np.vstack((delta.real, delta.imag)))
        base = np.floor(coords)
        best = np.full(delta.shape, np.inf)
        for dj in (0, 1):
            for dk in (0, 1):
                point = (base[0] + dj) * self.a + (base[1] + dk) * self.b
                best = np.minimum(best, np.abs(delta - point))
        return best

    def pole_distance(self, zeta) -> np.ndarray:
        zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
        return np.minimum(self._lattice_distance(zeta - self.p1), self._lattice_distance(zeta - self.p2))

    def _sigma(self, zeta):
        return weierstrass_sigma(zeta, self.a, self.b, self.order)

    def _quotient(self, zeta: np.ndarray) -> np.ndarray:
        return self._sigma(zeta - self.midpoint) ** 2 / (self._sigma(zeta - self.p1) * self._sigma(zeta - self.p2))

    def evaluate(self, zeta):
        """g(ζ); raises NearPole within 1e-12 of a pole."""
        scalar = np.ndim(zeta) == 0
        zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
        if np.any(self.pole_distance(zeta) < POLE_GUARD):
            raise NearPole("Kernel evaluated at a pole.")
        value = self._quotient(zeta)
        return complex(value[0]) if scalar else value

    def residue(self, pole: int = 1, step: float = 1e-2, levels: int = 5) -> complex:
        """Res(g, p_pole) as the limit of (ζ - p)g(ζ), Richardson-extrapolated in the step.

        The symmetric average over ±h removes the odd powers, so the table eliminates
        h², h⁴, ... in turn.
        """
        if pole not in (1, 2):
            raise ValueError("Pole index must be 1 or 2.")
        p = self.p1 if pole == 1 else self.p2
        direction = np.exp(1j * np.pi / 7)
        steps = step / 2.0 ** np.arange(levels) * direction
        values = (steps * self._quotient(p + steps) - steps * self._quotient(p - steps)) / 2
        table = [complex(v) for v in values]
        for level in range(1, levels):
            factor = 4.0**level
            table = [(factor * table[i + 1] - table[i]) / (factor - 1) for i in range(len(table) - 1)]
        return table[0]

    def contour_integral(self, nodes: int = 64) -> complex:
        """(1/2πi) ∮ g over the boundary of the period parallelogram centered at the poles' midpoint."""
        corner = self.midpoint - (self.a + self.b) / 2
        path = [corner, corner + self.a, corner + self.a + self.b, corner + self.b, corner]
        x, w = np.polynomial.legendre.leggauss(nodes)
        t = (x + 1) / 2
        total = 0j
        for start, end in zip(path, path[1:]):
            total += np.sum(w / 2 * self.evaluate(start + t * (end - start))) * (end - start)
        return complex(total / (2j * np.pi))

    def periodicity_residual(self, points) -> float:
        """max over the points of |g(ζ + a) - g(ζ)| and |g(ζ + b) - g(ζ)|, relative to |g(ζ)|."""
        zeta = np.asarray(points, dtype=complex)
        g = self.evaluate(zeta)
        shifted = np.concatenate((self.evaluate(zeta + self.a), self.evaluate(zeta + self.b)))
        return float(np.max(np.abs(shifted - np.concatenate((g, g))) / np.abs(np.concatenate((g, g)))))

    def plateau(self, zeta, start: int = 20, tolerance: float = 1e-9, max_order: int = 640) -> tuple[complex, int]:
        """g(ζ) with the truncation order doubled until successive values agree to `tolerance`."""
        order = start
        previous = dataclasses.replace(self, order=order).evaluate(zeta)
        while order < max_order:
            order *= 2
            current = dataclasses.replace(self, order=order).evaluate(zeta)
            if abs(current - previous) < tolerance * max(abs(current), np.finfo(float).tiny):
                return current, order
            previous = current
        raise QuadratureFailure(f"Kernel did not settle below order {max_order}.")
