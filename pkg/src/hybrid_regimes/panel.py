"""Economic time-series panel: CSV I/O, forward-fill imputation, date split
and column standardization.

Values are fractional day-on-day changes (0.01 == +1%). Missing cells are
stored as NaN until :func:`impute_forward` fills them.
"""
from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    ColumnAllMissing,
    ColumnMismatch,
    DataError,
    DuplicateColumn,
    DuplicateDate,
    EmptySide,
    LeadingMissing,
    MissingValues,
    RaggedRow,
    UnparsableDate,
    UnparsableValue,
    ZeroVariance,
)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Panel:
    dates: tuple[dt.date, ...]
    values: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "values", _frozen(np.atleast_2d(self.values)))
        T, S = self.values.shape
        if len(self.dates) != T:
            raise DataError(f"{len(self.dates)} dates for {T} rows")
        if len(self.names) != S:
            raise DataError(f"{len(self.names)} names for {S} columns")
        if len(set(self.names)) != S:
            raise DuplicateColumn("column names are not unique")
        for a, b in zip(self.dates, self.dates[1:]):
            if not a < b:
                raise DataError(f"dates not strictly increasing at {b}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    def equals(self, other: "Panel") -> bool:
        return (
            self.dates == other.dates
            and self.names == other.names
            and np.array_equal(self.values, other.values, equal_nan=True)
        )


@dataclass(frozen=True, eq=False)
class SplitPanel:
    train: Panel
    test: Panel
    split_date: dt.date


@dataclass(frozen=True, eq=False)
class Standardizer:
    names: tuple[str, ...]
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "means", _frozen(self.means))
        object.__setattr__(self, "stds", _frozen(self.stds))
        if np.any(self.stds <= 0):
            raise ZeroVariance("standard deviations must be strictly positive")

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(d["names"], np.asarray(d["means"]), np.asarray(d["stds"]))


def parse_date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise UnparsableDate(f"cannot parse date {text!r} (expected YYYY-MM-DD)") from None


def load_panel(path: str | Path, date_column: str = "date") -> Panel:
    """Read a panel CSV. Rows are sorted by date; blank cells become NaN."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"panel file {path} not found")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if date_column not in header:
            raise DataError(f"{path}: no date column {date_column!r} in header")
        if len(set(header)) != len(header):
            dupes = sorted({h for h in header if header.count(h) > 1})
            raise DuplicateColumn(f"{path}: duplicate column(s) {dupes}")
        di = header.index(date_column)
        names = [h for i, h in enumerate(header) if i != di]

        rows: dict[dt.date, list[float]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise RaggedRow(f"{path}:{lineno}: {len(row)} fields, header has {len(header)}")
            day = parse_date(row[di])
            if day in rows:
                raise DuplicateDate(f"{path}:{lineno}: duplicate date {day}")
            vals = []
            for i, cell in enumerate(row):
                if i == di:
                    continue
                cell = cell.strip()
                if cell == "":
                    vals.append(np.nan)
                    continue
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise UnparsableValue(f"{path}:{lineno}: bad number {cell!r}") from None
            rows[day] = vals

    dates = sorted(rows)
    values = np.array([rows[d] for d in dates], dtype=float).reshape(len(dates), len(names))
    return Panel(dates, values, names)


def write_panel(panel: Panel, path: str | Path, date_column: str = "date") -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([date_column, *panel.names])
        for day, row in zip(panel.dates, panel.values):
            w.writerow([day.isoformat(), *("" if np.isnan(v) else repr(float(v)) for v in row)])


def impute_forward(panel: Panel, fill_leading: bool = False) -> Panel:
    """Replace each missing cell with the latest observed value in its column.

    Cells before a column's first observation raise :class:`LeadingMissing`
    unless ``fill_leading`` is set, in which case they become 0.0.
    """
    values = np.array(panel.values)
    missing = np.isnan(values)
    for j, name in enumerate(panel.names):
        col_missing = missing[:, j]
        if col_missing.all():
            raise ColumnAllMissing(f"column {name!r} has no observations")
        if col_missing[0] and not fill_leading:
            first = int(np.argmin(col_missing))
            raise LeadingMissing(
                f"column {name!r} is missing before its first observation on {panel.dates[first]}"
            )
    # index of the latest observed row at or before each row
    idx = np.where(~missing, np.arange(len(values))[:, None], 0)
    np.maximum.accumulate(idx, axis=0, out=idx)
    filled = np.take_along_axis(values, idx, axis=0)
    if fill_leading:
        filled[np.isnan(filled)] = 0.0
    return Panel(panel.dates, filled, panel.names)


def split_at(panel: Panel, split_date: dt.date) -> SplitPanel:
    n_train = sum(1 for d in panel.dates if d <= split_date)
    if n_train == 0 or n_train == len(panel.dates):
        raise EmptySide(
            f"split at {split_date} leaves {n_train} training and "
            f"{len(panel.dates) - n_train} test rows"
        )
    train = Panel(panel.dates[:n_train], panel.values[:n_train], panel.names)
    test = Panel(panel.dates[n_train:], panel.values[n_train:], panel.names)
    return SplitPanel(train, test, split_date)


def concat(panels: Sequence[Panel]) -> Panel:
    names = panels[0].names
    for p in panels[1:]:
        if p.names != names:
            raise ColumnMismatch("cannot concatenate panels with different columns")
    dates = [d for p in panels for d in p.dates]
    return Panel(dates, np.vstack([p.values for p in panels]), names)


def fit_standardizer(panel: Panel) -> Standardizer:
    """Column means and sample (ddof=1) standard deviations."""
    if panel.missing.any():
        raise MissingValues("panel has missing cells; impute first")
    if panel.shape[0] < 2:
        raise DataError("need at least two rows to standardize")
    means = panel.values.mean(axis=0)
    stds = panel.values.std(axis=0, ddof=1)
    bad = [n for n, s in zip(panel.names, stds) if not s > 0]
    if bad:
        raise ZeroVariance(f"zero-variance column(s): {bad}")
    return Standardizer(panel.names, means, stds)


def _check_columns(expected: tuple[str, ...], panel: Panel) -> None:
    if panel.names != expected:
        raise ColumnMismatch(
            f"panel columns {list(panel.names)[:5]}... do not match fitted columns "
            f"{list(expected)[:5]}... ({panel.shape[1]} vs {len(expected)})"
        )


def apply_standardizer(s: Standardizer, panel: Panel) -> Panel:
    _check_columns(s.names, panel)
    return Panel(panel.dates, (panel.values - s.means) / s.stds, panel.names)


def invert_standardizer(s: Standardizer, panel: Panel) -> Panel:
    _check_columns(s.names, panel)
    return Panel(panel.dates, panel.values * s.stds + s.means, panel.names)
