"""Power-law fits on log-log axes.

y ≈ exp(intercept)·x^slope is fitted as the straight line log y = intercept + slope·log x
by weighted least squares; the standard error σ of an estimate y enters log space as σ/y.
"""

from __future__ import annotations
from typing import Sequence

import numpy as np
from scipy.optimize import curve_fit

from cardy_lab.logs import ExperimentLogger as _ExperimentLogger, LOGGER_NAME as _LOGGER_NAME
from cardy_lab.models.exceptions import DegeneratePoints, StatisticalFloor
from cardy_lab.models.structures import FitResult


logger = _ExperimentLogger(_LOGGER_NAME)
TRANSIENT_FACTOR = 3.0
FLOOR_SIGMAS = 3.0
_RESIDUAL_TOLERANCE = 1e-9


def linear_func_to_fit(x, a, b):
    return b * x + a


def _linear_jacobian(x, a, b):
    return np.column_stack((np.ones_like(x), x))


def _usable(points: Sequence[tuple[float, float, float]]) -> list[tuple[float, float, float]]:
    return [(float(x), float(y), float(s)) for x, y, s in points if x > 0 and y > 0]


def _fit(points: list[tuple[float, float, float]]) -> tuple[float, float, float, np.ndarray]:
    """(intercept, slope, slope stderr, log residuals) of the points, sorted by scale."""
    x = np.log([p[0] for p in points])
    y = np.log([p[1] for p in points])
    sigma = np.array([p[2] / p[1] for p in points])
    weighted = bool(np.all(sigma > 0))
    if weighted:
        slope, intercept = np.polyfit(x, y, 1, w=1 / sigma)
    else:
        slope, intercept = np.polyfit(x, y, 1)
    try:
        parameters, covariance = curve_fit(
            linear_func_to_fit,
            x,
            y,
            p0=(intercept, slope),
            sigma=sigma if weighted else None,
            absolute_sigma=weighted,
            jac=_linear_jacobian,
        )
    except (RuntimeError, ValueError) as e:
        raise DegeneratePoints(f"Least squares failed on the points: {e}") from None
    intercept, slope = (float(v) for v in parameters)
    variance = float(covariance[1, 1])
    stderr = float(np.sqrt(variance)) if np.isfinite(variance) and variance >= 0 else float("inf")
    return intercept, slope, stderr, y - linear_func_to_fit(x, intercept, slope)


def _r_squared(points: list[tuple[float, float, float]], residuals: np.ndarray) -> float:
    y = np.log([p[1] for p in points])
    total = float(np.sum((y - y.mean()) ** 2))
    if total == 0:
        return 1.0
    return 1.0 - float(np.sum(residuals**2)) / total


def fit_power_law(
    points: Sequence[tuple[float, float, float]], exclude_transient: bool = True, context: str = ""
) -> FitResult:
    """Fit (scale, estimate, estimate_stderr) triples with a power law.

    Points with a non-positive scale or estimate cannot enter log space and are skipped.
    With `exclude_transient`, the smallest-scale point is left out when its residual is
    more than three times the residual of the next scale (at least four points needed).
    """
    usable = sorted(_usable(points), key=lambda p: p[0])
    if len(usable) < len(points):
        logger.warning(f"{len(points) - len(usable)} points with non-positive values left out of the fit.", context)
    if len(usable) < 3:
        raise DegeneratePoints(f"A power-law fit needs at least 3 positive points, got {len(usable)}.")
    if len({p[0] for p in usable}) == 1:
        raise DegeneratePoints("All scales of the fit are equal.")

    intercept, slope, stderr, residuals = _fit(usable)
    excluded: list[tuple[float, float, float]] = []
    if exclude_transient and len(usable) >= 4:
        first, second = abs(residuals[0]), abs(residuals[1])
        if first > TRANSIENT_FACTOR * second and first > _RESIDUAL_TOLERANCE:
            excluded = [usable[0]]
            logger.info(
                f"Scale {usable[0][0]:g} excluded as a transient: residual {first:.3g} vs {second:.3g}.", context
            )
            usable = usable[1:]
            intercept, slope, stderr, residuals = _fit(usable)

    return FitResult(
        slope=slope,
        intercept=intercept,
        stderr=stderr,
        r_squared=_r_squared(usable, residuals),
        points=tuple(usable),
        residuals=tuple(float(r) for r in residuals),
        excluded=tuple(excluded),
    )


def check_statistical_floor(deviations: Sequence[float], stderrs: Sequence[float], context: str = "") -> None:
    """Raise StatisticalFloor when at least half of the deviations lie within 3σ of zero."""
    deviations = np.abs(np.asarray(deviations, dtype=float))
    stderrs = np.asarray(stderrs, dtype=float)
    unresolved = int(np.count_nonzero(deviations < FLOOR_SIGMAS * stderrs))
    if deviations.size and 2 * unresolved >= deviations.size:
        raise StatisticalFloor(
            f"{unresolved} of {deviations.size} deviations are within {FLOOR_SIGMAS:g}σ of zero; "
            f"more trials are needed to resolve the bias."
        )
