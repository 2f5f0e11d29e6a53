from __future__ import annotations
import dataclasses
import threading
from typing import Any, Callable

import numpy as np

from cardy_lab.logs import ExperimentLogger as _ExperimentLogger, LOGGER_NAME as _LOGGER_NAME
from cardy_lab.models.events import EventQueue as _EventQueue, EventType as _EventType
from cardy_lab.models.exceptions import WorkerFailure


logger = _ExperimentLogger(_LOGGER_NAME)
DEFAULT_CHUNK_SIZE = 500


def point_seed(seed: int, point_index: int) -> int:
    """64-bit seed of one scale point, derived from the run seed."""
    state = np.random.SeedSequence([seed, point_index]).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 32) | int(state[1])


def chunks(first_trial: int, stop_trial: int, size: int = DEFAULT_CHUNK_SIZE) -> list[tuple[int, int]]:
    """Split a trial range into consecutive chunks of at most `size` trials."""
    if size < 1:
        raise ValueError("Chunk size must be positive.")
    return [(start, min(start + size, stop_trial)) for start in range(first_trial, stop_trial, size)]


@dataclasses.dataclass(frozen=True)
class ChunkResult:
    first_trial: int
    stop_trial: int
    value: Any


class TrialPool:
    """Evaluates a task over chunks of trials in worker threads.

    The chunking does not depend on the number of workers and the results are returned in
    chunk order, so any sum over them is the same for every worker count.
    """

    def __init__(self, workers: int = 1, chunk_size: int = DEFAULT_CHUNK_SIZE, context: str = "") -> None:
        if workers < 1:
            raise ValueError("At least one worker is needed.")
        self._workers = workers
        self._chunk_size = chunk_size
        self._context = context
        self._threads: dict[int, threading.Thread] = dict()

    @property
    def workers(self) -> int:
        return self._workers

    def run(self, task: Callable[[int, int], Any], first_trial: int, stop_trial: int) -> list[ChunkResult]:
        """Run `task(first, stop)` on every chunk of [first_trial, stop_trial).

        Raises WorkerFailure when a task raises; the remaining chunks are abandoned.
        """
        pending = chunks(first_trial, stop_trial, self._chunk_size)
        if not pending:
            return []
        lock = threading.Lock()
        stop_flag = threading.Event()
        queue = _EventQueue(self._context)

        def work() -> None:
            while not stop_flag.is_set():
                with lock:
                    if not pending:
                        return
                    start, stop = pending.pop(0)
                try:
                    value = task(start, stop)
                except Exception as e:
                    stop_flag.set()
                    queue.add(_EventType.CHUNK_FAILED, (start, stop, e))
                    return
                queue.add(_EventType.CHUNK_FINISHED, ChunkResult(start, stop, value))

        expected = len(pending)
        for index in range(min(self._workers, expected)):
            self._threads[index] = threading.Thread(target=work, daemon=True)
        for t in self._threads.values():
            t.start()

        results: list[ChunkResult] = []
        failure = None
        for _ in range(expected):
            event = queue.get()
            if event.event_type == _EventType.CHUNK_FAILED:
                failure = event.data
                break
            results.append(event.data)
        self.stop()
        if failure is not None:
            start, stop, error = failure
            exc = WorkerFailure(f"Trials {start}..{stop - 1} failed: {error}")
            logger.log_on_exception(exc, self._context)
            raise exc from error
        return sorted(results, key=lambda r: r.first_trial)

    def stop(self) -> None:
        for thread in self._threads.values():
            if thread.is_alive():
                thread.join()
        self._threads.clear()
