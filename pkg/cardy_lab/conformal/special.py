"""Cardy's crossing formula and the Schwarz–Christoffel map of the upper half-plane onto
the unit equilateral triangle T_unit with vertices 0, 1, e^{iπ/3}.

F(w) = (1/B) ∫₀^w t^{-2/3} (1 - t)^{-2/3} dt,   B = B(1/3, 1/3),

sends 0, 1, ∞ to 0, 1, e^{iπ/3}. The Möbius map M(w) = 1/(1 - w) permutes 0 → 1 → ∞ → 0
and F∘M = ρ∘F with ρ the rotation of T_unit about its centroid by 2π/3, so the integral is
only ever evaluated on the cell C0 = {|w| ≤ 1, Re w ≤ 1/2}, where the integrand is smooth
along the ray from 0 to w.
"""

from __future__ import annotations
import math

import numpy as np
from scipy import integrate, optimize, special

from cardy_lab.models.exceptions import OutOfRange, QuadratureFailure
from cardy_lab.models.structures import SQRT3, TAU


BETA = special.beta(1 / 3, 1 / 3)
CARDY_CONSTANT = 3 * special.gamma(2 / 3) / special.gamma(1 / 3) ** 2
APEX = complex(0.5, SQRT3 / 2)  # e^{iπ/3}
CENTROID = complex(0.5, SQRT3 / 6)
SMALL_ANNULUS_LIMIT = 16 ** (1 / 3) * 3 / BETA
_NODES = 48
_CHECK_NODES = 64
_TOLERANCE = 1e-10


def cardy_probability(m: float) -> float:
    """Limit of the crossing probability for cross-ratio m."""
    if not 0 < m < 1:
        raise OutOfRange(f"Cross-ratio must lie in (0, 1), got {m}.")
    return float(CARDY_CONSTANT * m ** (1 / 3) * special.hyp2f1(1 / 3, 2 / 3, 4 / 3, m))


def rotate(t: np.ndarray, turns: int = 1) -> np.ndarray:
    """ρ^turns about the centroid of T_unit."""
    return CENTROID + TAU**turns * (np.asarray(t) - CENTROID)


def _jacobi_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = special.roots_jacobi(n, 0.0, -2 / 3)
    return (1 + x) / 2, w * 2 ** (-1 / 3)


_RULE = _jacobi_rule(_NODES)
_CHECK_RULE = _jacobi_rule(_CHECK_NODES)


def _cube_root(w: np.ndarray) -> np.ndarray:
    return np.abs(w) ** (1 / 3) * np.exp(1j * np.angle(w) / 3)


def _cell_integral(w: np.ndarray, rule=None) -> np.ndarray:
    s, weights = rule if rule is not None else _RULE
    inner = np.power(1 - w[..., None] * s, -2 / 3) @ weights
    return _cube_root(w) * inner / BETA


def _upper(w) -> np.ndarray:
    w = np.asarray(w, dtype=complex)
    return w.real + 1j * np.where(w.imag > 0, w.imag, 0.0)


def _cells(w: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    finite = np.isfinite(w)
    near_zero = finite & (np.abs(w) <= 1) & (w.real <= 0.5)
    near_one = finite & ~near_zero & (np.abs(w - 1) <= 1)
    return near_zero, near_one, finite & ~near_zero & ~near_one


def sc_half_plane_to_triangle(w, method: str = "jacobi"):
    """F(w) for Im w ≥ 0; w = ∞ (any infinite value) gives e^{iπ/3}.

    `method` selects the cell integral: "jacobi" (Gauss–Jacobi rule, checked against a
    finer rule) or "quad" (adaptive quadrature after the substitution s = u³).
    """
    scalar = np.ndim(w) == 0
    w = _upper(np.atleast_1d(w))
    result = np.full(w.shape, APEX, dtype=complex)
    c0, c1, c_inf = _cells(w)
    finite = c0 | c1 | c_inf
    local = np.zeros(w.shape, dtype=complex)
    turns = np.zeros(w.shape, dtype=np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        local[c0] = w[c0]
        local[c1] = _upper(1 - 1 / w[c1])
        local[c_inf] = _upper(1 / (1 - w[c_inf]))
    turns[c1] = 1
    turns[c_inf] = 2
    if not finite.any():
        return result[0] if scalar else result

    if method == "jacobi":
        values = _cell_integral(local[finite])
        gap = np.max(np.abs(values - _cell_integral(local[finite], _CHECK_RULE)))
        if gap > _TOLERANCE:
            raise QuadratureFailure(f"Gauss–Jacobi rules disagree by {gap:.3g}.")
    elif method == "quad":
        values = _cell_quad(local[finite])
    else:
        raise ValueError(f"Unknown integration method '{method}'.")
    result[finite] = rotate(values, turns[finite])
    return result[0] if scalar else result


def _cell_quad(w: np.ndarray) -> np.ndarray:
    out = np.empty(w.shape, dtype=complex)
    for index, value in np.ndenumerate(w):

        def integrand(u: float, part) -> float:
            return part(3 * (1 - value * u**3) ** (-2 / 3))

        re, err_re = integrate.quad(integrand, 0.0, 1.0, args=(np.real,), epsabs=1e-13, epsrel=1e-13, limit=200)
        im, err_im = integrate.quad(integrand, 0.0, 1.0, args=(np.imag,), epsabs=1e-13, epsrel=1e-13, limit=200)
        if max(err_re, err_im) > _TOLERANCE:
            raise QuadratureFailure(f"Adaptive quadrature did not converge at w={value}.")
        out[index] = _cube_root(np.asarray(value)) * complex(re, im) / BETA
    return out


def sc_derivative(w) -> np.ndarray:
    """F'(w) = w^{-2/3} (1 - w)^{-2/3} / B with the branches of the upper half-plane."""
    w = _upper(w)
    arg_w = np.angle(w)
    one_minus = 1 - w
    arg_1 = np.angle(one_minus)
    arg_1 = np.where(arg_1 > 0, arg_1 - 2 * math.pi, arg_1)
    modulus = (np.abs(w) * np.abs(one_minus)) ** (-2 / 3)
    return modulus * np.exp(-2j / 3 * (arg_w + arg_1)) / BETA


def _mobius_power(w: np.ndarray, turns: int) -> np.ndarray:
    """M^turns(w) with M(w) = 1/(1 - w)."""
    for _ in range(turns % 3):
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(np.isinf(w), 0j, np.where(w == 1, np.inf + 0j, 1 / (1 - w)))
    return w


def sc_triangle_to_half_plane(t):
    """Inverse of F on the closed triangle T_unit; e^{iπ/3} maps to ∞."""
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=complex))
    result = np.empty(t.shape, dtype=complex)
    vertices = np.array([0j, 1 + 0j, APEX])
    for index, value in np.ndenumerate(t):
        turns = int(np.argmin(np.abs(vertices - value)))
        local = complex(rotate(value, -turns))
        if abs(local) < 1e-15:
            w_local = 0j
        else:
            w_local = _solve_local(local)
        result[index] = _mobius_power(np.array([w_local]), turns)[0]
    return result[0] if scalar else result


def _solve_local(target: complex) -> complex:
    guess = (BETA * target / 3) ** 3

    def residual(w):
        return complex(sc_half_plane_to_triangle(complex(w))) - target

    def slope(w):
        return complex(sc_derivative(complex(w)))

    try:
        root = optimize.newton(residual, guess, fprime=slope, tol=1e-13, maxiter=60)
        if abs(residual(root)) < 1e-11:
            return complex(root.real, max(root.imag, 0.0))
    except (RuntimeError, ZeroDivisionError, OverflowError):
        pass
    solution = optimize.root(
        lambda v: [residual(complex(v[0], v[1])).real, residual(complex(v[0], v[1])).imag],
        [guess.real, guess.imag],
        method="hybr",
        tol=1e-15,
    )
    w = complex(solution.x[0], max(solution.x[1], 0.0))
    if abs(residual(w)) > 1e-9:
        raise QuadratureFailure(f"Inverse triangle map did not converge at t={target}.")
    return w


# Möbius transformations on the Riemann sphere, ∞ as a complex infinity


def apply_mobius(matrix: np.ndarray, z) -> np.ndarray:
    """(a z + b) / (c z + d) with ∞ handled on both sides."""
    (a, b), (c, d) = matrix
    z = np.asarray(z, dtype=complex)
    infinite = np.isinf(z)
    safe = np.where(infinite, 0j, z)
    numerator = a * safe + b
    denominator = c * safe + d
    with np.errstate(divide="ignore", invalid="ignore"):
        finite_value = np.where(denominator == 0, np.inf + 0j, numerator / np.where(denominator == 0, 1, denominator))
        at_infinity = np.inf + 0j if c == 0 else complex(a / c)
    return np.where(infinite, at_infinity, finite_value)


def three_point_mobius(p: complex, q: complex, s: complex) -> np.ndarray:
    """Matrix of the Möbius map sending p → 0, q → 1, s → ∞."""
    if np.isinf(p):
        return np.array([[0, q - s], [1, -s]], dtype=complex)
    if np.isinf(q):
        return np.array([[1, -p], [1, -s]], dtype=complex)
    if np.isinf(s):
        return np.array([[1, -p], [0, q - p]], dtype=complex)
    return np.array([[q - s, -p * (q - s)], [q - p, -s * (q - p)]], dtype=complex)
