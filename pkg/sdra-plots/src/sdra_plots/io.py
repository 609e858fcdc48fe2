"""CSV reading for the experiment output schemas.

Every experiment CSV opens with one or more ``#`` comment lines (the
config digest and command provenance) followed by a single header row
naming the columns. Reading validates the expected columns up front
and refuses empty tables, so a schema mismatch surfaces as a clear
error instead of a blank figure.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["SchemaError", "Table", "read_table"]


class SchemaError(ValueError):
    """Input CSV does not match the expected schema."""


@dataclass(frozen=True)
class Table:
    """One parsed CSV: provenance comments, column names, data rows."""

    path: Path
    comments: tuple[str, ...]
    columns: tuple[str, ...]
    rows: tuple[dict, ...]

    def floats(self, name: str) -> np.ndarray:
        """The named column as a float array."""
        try:
            return np.array([float(r[name]) for r in self.rows])
        except (ValueError, KeyError) as exc:
            raise SchemaError(
                f"{self.path}: column {name!r} is not numeric ({exc})"
            ) from exc

    def strings(self, name: str) -> list[str]:
        """The named column as a list of strings."""
        if name not in self.columns:
            raise SchemaError(f"{self.path}: missing column {name!r}")
        return [r[name] for r in self.rows]

    def unique(self, name: str) -> list[str]:
        """Distinct values of the named column, in first-seen order."""
        return list(dict.fromkeys(self.strings(name)))


def read_table(path, required: tuple[str, ...] = ()) -> Table:
    """Read one experiment CSV and validate its columns.

    Args:
        path: CSV file to read.
        required: column names that must all be present.

    Returns:
        The parsed table. Comment lines keep their leading ``#``.

    Raises:
        SchemaError: missing file, missing columns, or no data rows.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    comments = []
    body_start = 0
    for line in lines:
        if line.startswith("#"):
            comments.append(line)
            body_start += 1
        else:
            break
    reader = csv.DictReader(lines[body_start:])
    if reader.fieldnames is None:
        raise SchemaError(f"{path}: no header row")
    columns = tuple(reader.fieldnames)
    missing = [c for c in required if c not in columns]
    if missing:
        raise SchemaError(
            f"{path}: missing columns {missing}; found {list(columns)}"
        )
    rows = tuple(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return Table(path=path, comments=tuple(comments), columns=columns, rows=rows)
