from __future__ import annotations
import dataclasses
import math
from typing import Callable

from cardy_lab.lattice.domain import DiscreteDomain
from cardy_lab.logs import ExperimentLogger as _ExperimentLogger, LOGGER_NAME as _LOGGER_NAME
from cardy_lab.percolation.engine import ClusterFlood, Configuration, sample_configuration
from cardy_lab.percolation.rng import trial_key
from cardy_lab.results import PointResult, RunManifest
from cardy_lab.workers.pool import TrialPool


logger = _ExperimentLogger(_LOGGER_NAME)


@dataclasses.dataclass(frozen=True)
class Estimate:
    """Number of trials in [first_trial, first_trial + trials) where an event held."""

    hits: int
    trials: int
    seed: int
    first_trial: int = 0

    @property
    def probability(self) -> float:
        return self.hits / self.trials if self.trials else 0.0

    @property
    def stderr(self) -> float:
        """Binomial standard error √(p̂(1 − p̂)/n)."""
        p = self.probability
        return math.sqrt(p * (1 - p) / self.trials) if self.trials else 0.0


def count_hits(
    dd: DiscreteDomain, event: Callable[[Configuration], bool], seed: int, first_trial: int, stop_trial: int
) -> int:
    return sum(1 for t in range(first_trial, stop_trial) if event(sample_configuration(dd, seed, t)))


def _estimate(
    n_sites: int,
    count: Callable[[int, int], int],
    trials: int,
    seed: int,
    first_trial: int,
    workers: int,
    context: str,
) -> Estimate:
    if trials < 1:
        raise ValueError("At least one trial is needed.")
    logger.debug(f"Sampling {trials} trials on {n_sites} sites with {workers} workers.", context)
    pool = TrialPool(workers, context=context)
    chunks = pool.run(count, first_trial, first_trial + trials)
    hits = sum(chunk.value for chunk in chunks)
    return Estimate(hits, trials, seed, first_trial)


def estimate_probability(
    dd: DiscreteDomain,
    event: Callable[[Configuration], bool],
    trials: int,
    seed: int,
    first_trial: int = 0,
    workers: int = 1,
    context: str = "",
) -> Estimate:
    """Monte Carlo frequency of `event` over a trial range, split over worker threads."""
    return _estimate(
        dd.n_sites,
        lambda start, stop: count_hits(dd, event, seed, start, stop),
        trials,
        seed,
        first_trial,
        workers,
        context,
    )


def estimate_flood(
    flood: ClusterFlood, trials: int, seed: int, first_trial: int = 0, workers: int = 1, context: str = ""
) -> Estimate:
    """Frequency of trials whose open clusters grown from the flood sources reach its targets.

    Trial t uses the same site colors as `sample_configuration(dd, seed, t)`.
    """
    return _estimate(
        flood.domain.n_sites,
        lambda start, stop: sum(1 for t in range(start, stop) if flood.reaches(trial_key(seed, t))),
        trials,
        seed,
        first_trial,
        workers,
        context,
    )


def measure_point(manifest: RunManifest | None, key: str, compute: Callable[[], PointResult]) -> PointResult:
    """Stored result of a completed point, otherwise `compute()` recorded in the manifest."""
    if manifest is not None:
        stored = manifest.completed(key)
        if stored is not None:
            logger.info("Point already completed, reusing the stored result.", key)
            return stored
    point = compute()
    if manifest is not None:
        manifest.record(key, point)
    logger.info(f"Estimate {point.estimate:.6g} ± {point.stderr:.2g} from {point.trials} trials.", key)
    return point
