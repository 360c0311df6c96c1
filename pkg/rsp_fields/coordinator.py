"""Parallel evaluation of independent sweep points."""
from __future__ import annotations

import asyncio
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import logging
import os
from typing import Any, Callable, List, Optional, Sequence

import async_timeout

from .const import DEFAULT_POINT_TIMEOUT, DEFAULT_THREADS, ENV_THREADS
from .errors import ConfigError, RspError

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class PointResult:
    """Outcome of one sweep point; ``error`` is set when the point failed."""

    index: int
    value: Any
    result: Any = None
    error: Optional[str] = None
    kind: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def resolve_threads(requested: Optional[int] = None) -> int:
    """Thread count from the command line, then the environment, then the default."""
    if requested is None:
        raw = os.environ.get(ENV_THREADS)
        if raw is None or not raw.strip():
            return DEFAULT_THREADS
        try:
            requested = int(raw)
        except ValueError as err:
            raise ConfigError(f"{ENV_THREADS} must be an integer, got {raw!r}", "threads") from err
    if requested < 1:
        raise ConfigError(f"Thread count must be at least 1, got {requested}", "threads")
    return requested


class SweepCoordinator:
    """Class to evaluate sweep points on a thread pool, one deadline per point.

    A point past its deadline is recorded as failed and ``run`` returns without
    it, but its thread cannot be interrupted: it finishes in the background and
    the interpreter joins it at exit.
    """

    def __init__(
        self,
        worker: Callable[[Any], Any],
        threads: int = DEFAULT_THREADS,
        point_timeout: float = DEFAULT_POINT_TIMEOUT,
    ) -> None:
        """Initialize."""
        if threads < 1:
            raise ConfigError(f"Thread count must be at least 1, got {threads}", "threads")
        self.worker = worker
        self.threads = threads
        self.point_timeout = point_timeout

    async def _async_run_point(
        self, loop: asyncio.AbstractEventLoop, executor: ThreadPoolExecutor, index: int, value: Any
    ) -> PointResult:
        try:
            async with async_timeout.timeout(self.point_timeout):
                result = await loop.run_in_executor(executor, self.worker, value)
        except asyncio.TimeoutError:
            _LOGGER.warning(
                "Sweep point %d (%s) timed out after %s s", index, value, self.point_timeout
            )
            return PointResult(
                index, value, error=f"timed out after {self.point_timeout} s", kind="TimeoutError"
            )
        except RspError as err:
            _LOGGER.warning("Sweep point %d (%s) failed: %s", index, value, err)
            return PointResult(index, value, error=str(err), kind=type(err).__name__)
        except Exception as err:  # pylint: disable=broad-except
            _LOGGER.error("Unexpected error at sweep point %d (%s): %s", index, value, err)
            return PointResult(index, value, error=str(err), kind=type(err).__name__)
        return PointResult(index, value, result=result)

    async def async_run(self, values: Sequence[Any]) -> List[PointResult]:
        """Evaluate every value and return the results in input order."""
        loop = asyncio.get_running_loop()
        executor = ThreadPoolExecutor(max_workers=self.threads, thread_name_prefix="rsp-sweep")
        try:
            results = await asyncio.gather(
                *(self._async_run_point(loop, executor, index, value) for index, value in enumerate(values))
            )
        finally:
            # timed-out workers cannot be interrupted; do not wait for them here
            executor.shutdown(wait=False, cancel_futures=True)
        failed = sum(1 for result in results if not result.ok)
        _LOGGER.debug(
            "Evaluated %d sweep points on %d threads (%d failed)", len(results), self.threads, failed
        )
        return sorted(results, key=lambda result: result.index)

    def run(self, values: Sequence[Any]) -> List[PointResult]:
        return asyncio.run(self.async_run(values))
