"""Delimited-text datasets with an ``id`` and ``freq`` column.

Parse failures carry the file, line and column of the offending cell so that
the CLI can point at it.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from regdecomp.decomposition import ContextData
from regdecomp.regression import DesignMatrix, FrequencyError, FrequencyVector

ID_COLUMN = "id"
FREQ_COLUMN = "freq"


class DatasetError(Exception):
    exit_code = 1


class ParseError(DatasetError):
    """Malformed file content; exit code 1."""

    def __init__(self, path, line: int, column: int, message: str):
        self.path, self.line, self.column = str(path), line, column
        super().__init__(f"{path}:{line}:{column}: {message}")


class SchemaError(DatasetError):
    """Missing or misaligned columns, or unmatched ids; exit code 2."""

    exit_code = 2


@dataclass(frozen=True)
class Dataset:
    path: Path
    header: tuple
    rows: tuple
    lines: tuple
    digest: str

    @property
    def name(self) -> str:
        return self.path.name

    @property
    def ids(self) -> list:
        col = self.header.index(ID_COLUMN)
        return [row[col] for row in self.rows]

    def require(self, *columns: str) -> None:
        missing = [c for c in columns if c not in self.header]
        if missing:
            raise SchemaError(f"{self.path}: missing column(s) {', '.join(repr(c) for c in missing)}")

    def numeric(self, column: str) -> np.ndarray:
        """Parse ``column`` as finite floats, reporting the first bad cell."""
        self.require(column)
        col = self.header.index(column)
        out = np.empty(len(self.rows))
        for r, row in enumerate(self.rows):
            text = row[col].strip()
            try:
                value = float(text)
            except ValueError:
                value = None
            if value is None or not np.isfinite(value):
                raise ParseError(self.path, self.lines[r], col + 1, f"cannot parse {text!r} as a finite number in column {column!r}")
            out[r] = value
        return out

    def frequencies(self, normalize: bool = False) -> FrequencyVector:
        values = self.numeric(FREQ_COLUMN)
        col = self.header.index(FREQ_COLUMN)
        negative = np.flatnonzero(values < 0)
        if negative.size:
            r = int(negative[0])
            raise ParseError(self.path, self.lines[r], col + 1, f"negative frequency {values[r]!r}")
        try:
            return FrequencyVector(values, normalize=normalize)
        except FrequencyError as exc:
            hint = "" if normalize else " (use --normalize-freq to rescale)"
            raise DatasetError(f"{self.path}: {exc}{hint}") from exc


def read_dataset(path, delimiter: str = ",") -> Dataset:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DatasetError(f"{path}: {exc.strerror or exc}") from exc
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError(path, 1, 1, "file is not valid UTF-8") from exc
    reader = csv.reader(text.splitlines(), delimiter=delimiter)
    try:
        header = tuple(h.strip() for h in next(reader))
    except StopIteration:
        raise ParseError(path, 1, 1, "empty file, expected a header row") from None
    if len(set(header)) != len(header):
        dup = next(h for h in header if header.count(h) > 1)
        raise ParseError(path, 1, header.index(dup) + 1, f"duplicate column {dup!r}")
    if ID_COLUMN not in header or FREQ_COLUMN not in header:
        raise SchemaError(f"{path}: header must contain {ID_COLUMN!r} and {FREQ_COLUMN!r} columns")
    id_col = header.index(ID_COLUMN)

    rows, lines, seen = [], [], {}
    for line, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ParseError(path, line, min(len(row), len(header)) + 1,
                             f"expected {len(header)} fields, found {len(row)}")
        row = [cell.strip() for cell in row]
        ident = row[id_col]
        if ident in seen:
            raise ParseError(path, line, id_col + 1, f"duplicate id {ident!r} (first on line {seen[ident]})")
        seen[ident] = line
        rows.append(tuple(row))
        lines.append(line)
    if not rows:
        raise ParseError(path, 2, 1, "no data rows")
    return Dataset(path, header, tuple(rows), tuple(lines), hashlib.sha256(raw).hexdigest())


def default_predictors(ds: Dataset, exclude: Sequence[str]) -> list:
    skip = {ID_COLUMN, FREQ_COLUMN, *exclude}
    return [c for c in ds.header if c not in skip]


def context_from_dataset(
    ds: Dataset,
    outcome: str,
    predictors: Sequence[str],
    normalize: bool = False,
    label: Optional[str] = None,
) -> ContextData:
    ds.require(outcome, *predictors)
    z = ds.numeric(outcome)
    P = np.column_stack([ds.numeric(c) for c in predictors]) if predictors else np.empty((len(z), 0))
    return ContextData(
        DesignMatrix.with_intercept(P, list(predictors)),
        z,
        ds.frequencies(normalize),
        label or ds.name,
    )
