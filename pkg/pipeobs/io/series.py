"""
CSV files of diagnostic series and sweep tables.

Files are UTF-8 with ``,`` separators, ``\\n`` line endings and a header row.
Floats are written with 17 significant digits so a read reproduces the
recorded values exactly.
"""

from __future__ import annotations

import csv
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from ..constants import OUTPUT
from ..diagnostics.series import DiagnosticsSeries
from ..exceptions import ValidationError
from ..models.types import FloatArray


def format_value(value: Any) -> str:
    if isinstance(value, float | np.floating):
        return format(float(value), ".17g")
    return "" if value is None else str(value)


def write_rows(
    path: str | Path, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]
) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding=OUTPUT.DEFAULT_ENCODING, newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(c)) for c in columns])
    return out


def write_series(series: DiagnosticsSeries, path: str | Path) -> Path:
    """Write the documented series columns, in order."""
    columns = OUTPUT.SERIES_COLUMNS
    data = [series.rows[c] for c in columns]
    return write_rows(path, columns, (dict(zip(columns, r, strict=True)) for r in zip(*data)))


def read_series(path: str | Path) -> dict[str, FloatArray]:
    """Columns of a series file as float arrays.

    Raises:
        ValidationError: the header differs from the documented columns
    """
    with open(path, encoding=OUTPUT.DEFAULT_ENCODING, newline="") as handle:
        reader = csv.reader(handle)
        header = tuple(next(reader, ()))
        if header != OUTPUT.SERIES_COLUMNS:
            raise ValidationError(
                "unexpected series header",
                {"found": list(header), "expected": list(OUTPUT.SERIES_COLUMNS)},
            )
        values = [[float(x) for x in row] for row in reader if row]
    table = np.array(values, dtype=np.float64).reshape(len(values), len(header))
    return {name: table[:, i] for i, name in enumerate(header)}


def write_sweep(rows: Iterable[Mapping[str, Any]], path: str | Path) -> Path:
    return write_rows(path, OUTPUT.SWEEP_COLUMNS, rows)


def read_sweep(path: str | Path) -> list[dict[str, str]]:
    with open(path, encoding=OUTPUT.DEFAULT_ENCODING, newline="") as handle:
        return list(csv.DictReader(handle))
