"""
Result tables and run metadata for experiment outputs.
"""

import csv
import hashlib
import json
import math
import platform
import subprocess
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import psutil

from rdphase.core.exceptions import OutputError, UsageError


def format_value(value: Any) -> str:
    """Renders one CSV cell; floats keep 17 significant digits."""
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    if hasattr(value, "item"):
        return format_value(value.item())
    return str(value)


class ResultTable:
    """
    An ordered collection of result rows with a fixed header.

    Example:
        table = ResultTable(["lambda", "slope", "verdict"])
        table.record({"lambda": 0.05, "slope": -0.01, "verdict": "persistent"})
        table.to_csv("phase.csv")
    """

    def __init__(self, fieldnames: Sequence[str], name: str = ""):
        if not fieldnames:
            raise UsageError("a result table needs at least one column")
        self.fieldnames: List[str] = list(fieldnames)
        self.name = name
        self._rows: List[Dict[str, Any]] = []

    def record(self, row: Dict[str, Any]) -> None:
        """
        Appends a row.

        Raises:
            UsageError: If the row names a column the table does not have.
        """
        unknown = set(row) - set(self.fieldnames)
        if unknown:
            raise UsageError(f"unknown columns for table: {sorted(unknown)}")
        self._rows.append({key: row.get(key) for key in self.fieldnames})

    def extend(self, rows: Iterable[Dict[str, Any]]) -> None:
        for row in rows:
            self.record(row)

    @property
    def rows(self) -> List[Dict[str, Any]]:
        return self._rows

    def column(self, name: str) -> List[Any]:
        return [row[name] for row in self._rows]

    def __len__(self) -> int:
        return len(self._rows)

    def summary(self) -> Dict[str, Any]:
        return {"name": self.name, "rows": len(self._rows), "columns": self.fieldnames}

    def to_csv(self, filepath) -> None:
        """Writes the table; an empty table still gets its header line."""
        try:
            with open(filepath, "w", newline="", encoding="utf-8") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(self.fieldnames)
                for row in self._rows:
                    writer.writerow([format_value(row[key]) for key in self.fieldnames])
        except OSError as e:
            raise OutputError(f"could not write '{filepath}': {e}") from e

    def to_json(self, filepath, **kwargs) -> None:
        try:
            with open(filepath, "w", encoding="utf-8") as f:
                json.dump(self._rows, f, indent=2, default=format_value, **kwargs)
        except OSError as e:
            raise OutputError(f"could not write '{filepath}': {e}") from e


def read_csv_rows(filepath) -> List[Dict[str, str]]:
    """Reads a CSV produced by `ResultTable.to_csv` back as string rows."""
    with open(filepath, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def config_digest(echo: str) -> str:
    return hashlib.sha256(echo.encode("utf-8")).hexdigest()


def build_identity() -> str:
    """`git describe` of the source tree, or the package version outside git."""
    from rdphase import __version__

    try:
        described = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
    except (OSError, subprocess.SubprocessError):
        return __version__
    if described.returncode != 0 or not described.stdout.strip():
        return __version__
    return f"{__version__}+{described.stdout.strip()}"


def host_facts() -> Dict[str, Any]:
    return {
        "python": platform.python_version(),
        "platform": platform.platform(),
        "physical_cores": psutil.cpu_count(logical=False),
        "logical_cores": psutil.cpu_count(logical=True),
        "memory_bytes": psutil.virtual_memory().total,
    }


def write_meta(
    filepath,
    *,
    digest: str,
    seed: int,
    replicas: int,
    rng: Dict[str, str],
    wall_time: float,
    extra: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """Writes `meta.json` and returns its contents."""
    from rdphase import __version__

    meta = {
        "config_digest": digest,
        "seed": seed,
        "replicas": replicas,
        "rng": rng,
        "version": __version__,
        "build": build_identity(),
        "host": host_facts(),
        "wall_time_seconds": wall_time,
    }
    if extra:
        meta.update(extra)
    try:
        with open(filepath, "w", encoding="utf-8") as f:
            json.dump(meta, f, indent=2, sort_keys=True, default=format_value)
    except OSError as e:
        raise OutputError(f"could not write '{filepath}': {e}") from e
    return meta
