"""Run reports and CSV emission."""
from __future__ import annotations

from contextlib import contextmanager
import csv
from dataclasses import dataclass, field
import json
import logging
import math
from pathlib import Path
import time
from typing import Any, Dict, Iterable, Iterator, List, Sequence

import numpy as np

from . import __version__
from .const import FILE_REPORT
from .numerics import LinearFit

_LOGGER = logging.getLogger(__name__)


def format_float(value: float) -> str:
    return format(float(value), ".17g")


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a header row and data rows; floats keep 17 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        count = 0
        for row in rows:
            writer.writerow([_cell(value) for value in row])
            count += 1
    _LOGGER.debug("Wrote %d rows to %s", count, path)
    return path


def fit_summary(fit: LinearFit, law: str) -> Dict[str, Any]:
    return {"law": law, "slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared}


def _jsonable(value: Any) -> Any:
    """Plain JSON value; non-finite floats become null."""
    if isinstance(value, dict):
        return {str(key): _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


@dataclass
class RunReport:
    """Echo of the configuration, derived quantities, fits and stage timings of one run."""

    command: str
    config: Dict[str, Dict[str, Any]]
    input_hash: str
    version: str = __version__
    derived: Dict[str, Any] = field(default_factory=dict)
    fits: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)
    files: List[str] = field(default_factory=list)

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        """Time a pipeline stage."""
        started = time.perf_counter()
        yield
        elapsed = time.perf_counter() - started
        self.timings[name] = elapsed
        _LOGGER.info("%s completed in %.3f s", name.capitalize(), elapsed)

    def add_file(self, path: Path) -> None:
        self.files.append(path.name)

    def as_dict(self) -> Dict[str, Any]:
        return _jsonable(
            {
                "command": self.command,
                "version": self.version,
                "input_hash": self.input_hash,
                "config": self.config,
                "derived": self.derived,
                "fits": self.fits,
                "timings": self.timings,
                "files": self.files,
            }
        )

    def write(self, directory: Path) -> Path:
        path = directory / FILE_REPORT
        self.add_file(path)
        path.write_text(
            json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n"
        )
        _LOGGER.debug("Wrote run report to %s", path)
        return path
