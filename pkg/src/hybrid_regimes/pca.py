"""Principal component analysis of a standardized panel via the SVD."""
from __future__ import annotations

import csv
import dataclasses
import datetime as dt
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DataError, DimensionMismatch, NumericalError
from .panel import Panel, Standardizer, _check_columns, _frozen, parse_date

EIGEN_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class PcaModel:
    """Loadings are columns (principal directions), sorted by eigenvalue."""

    names: tuple[str, ...]
    loadings: np.ndarray
    eigenvalues: np.ndarray
    n_selected: int
    standardizer: Standardizer | None = None

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "loadings", _frozen(self.loadings))
        object.__setattr__(self, "eigenvalues", _frozen(self.eigenvalues))
        S = len(self.names)
        if self.loadings.shape != (S, S) or self.eigenvalues.shape != (S,):
            raise DataError("loadings must be SxS and eigenvalues length S")
        if not 1 <= self.n_selected <= S:
            raise DataError(f"n_selected={self.n_selected} outside [1, {S}]")

    @property
    def explained_ratio(self) -> np.ndarray:
        return self.eigenvalues / self.eigenvalues.sum()

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "eigenvalues": self.eigenvalues.tolist(),
            "loadings": self.loadings.tolist(),
            "n_selected": self.n_selected,
            "standardizer": self.standardizer.to_dict() if self.standardizer else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        std = Standardizer.from_dict(d["standardizer"]) if d.get("standardizer") else None
        return cls(d["names"], np.asarray(d["loadings"]), np.asarray(d["eigenvalues"]),
                   int(d["n_selected"]), std)


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    dates: tuple[dt.date, ...]
    scores: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "scores", _frozen(np.atleast_2d(self.scores)))
        if len(self.dates) != self.scores.shape[0]:
            raise DataError("one date per score row required")

    @property
    def names(self) -> list[str]:
        return [f"PC{j + 1}" for j in range(self.scores.shape[1])]


class VarianceRow(NamedTuple):
    dimension: int
    eigenvalue: float
    pct: float
    cumulative_pct: float


def _orient(loadings: np.ndarray) -> np.ndarray:
    # make the largest-magnitude entry of every column positive
    pivot = np.argmax(np.abs(loadings), axis=0)
    signs = np.sign(loadings[pivot, np.arange(loadings.shape[1])])
    signs[signs == 0] = 1.0
    return loadings * signs


def fit_pca(standardized: Panel, standardizer: Standardizer | None = None,
            threshold: float | None = None) -> PcaModel:
    """Fit principal directions to an already standardized panel.

    The data is not re-centred; eigenvalue ``j`` is ``sigma_j**2 / (T - 1)``
    for singular value ``sigma_j``. If ``threshold`` is given, ``n_selected``
    is set with :func:`select_components`, otherwise all components are kept.
    """
    X = standardized.values
    T, S = X.shape
    if T < 2:
        raise DataError("PCA needs at least two rows")
    if not np.all(np.isfinite(X)):
        raise NumericalError("PCA input contains non-finite values")
    try:
        _, sv, vt = np.linalg.svd(X, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc
    if vt.shape[0] < S:
        # fewer rows than columns: complete the basis with the null space
        null = np.linalg.svd(vt, full_matrices=True)[2][vt.shape[0]:]
        vt = np.vstack([vt, null])
        sv = np.concatenate([sv, np.zeros(S - len(sv))])
    eig = sv**2 / (T - 1)
    order = np.argsort(-eig, kind="stable")
    eig = eig[order]
    eig[eig < EIGEN_FLOOR] = 0.0
    loadings = _orient(vt[order].T)
    model = PcaModel(standardized.names, loadings, eig, S, standardizer)
    if threshold is not None:
        model = dataclasses.replace(model, n_selected=select_components(model, threshold))
    return model


def select_components(model: PcaModel, threshold: float) -> int:
    """Smallest number of leading components whose variance share reaches threshold."""
    if not 0 < threshold <= 1:
        raise DataError(f"threshold must be in (0, 1], got {threshold}")
    cum = np.cumsum(model.eigenvalues)
    share = cum / cum[-1]
    return int(np.argmax(share >= threshold)) + 1


def transform(model: PcaModel, standardized: Panel, d: int | None = None) -> ScoreMatrix:
    _check_columns(model.names, standardized)
    d = model.n_selected if d is None else d
    if not 1 <= d <= len(model.names):
        raise DimensionMismatch(f"d={d} outside [1, {len(model.names)}]")
    return ScoreMatrix(standardized.dates, standardized.values @ model.loadings[:, :d])


def inverse_transform(model: PcaModel, scores: ScoreMatrix) -> Panel:
    d = scores.scores.shape[1]
    return Panel(scores.dates, scores.scores @ model.loadings[:, :d].T, model.names)


def explained_variance_table(model: PcaModel) -> list[VarianceRow]:
    eig = model.eigenvalues
    pct = 100.0 * eig / eig.sum()
    cum = 100.0 * np.cumsum(eig) / eig.sum()
    return [VarianceRow(j + 1, float(e), float(p), float(c))
            for j, (e, p, c) in enumerate(zip(eig, pct, cum))]


def top_loadings(model: PcaModel, dimension: int, n: int) -> list[tuple[str, float]]:
    """Columns ranked by squared loading on a 1-based principal direction."""
    S = len(model.names)
    if not 1 <= dimension <= S:
        raise DimensionMismatch(f"dimension {dimension} outside [1, {S}]")
    contrib = model.loadings[:, dimension - 1] ** 2
    order = np.argsort(-contrib, kind="stable")[:n]
    return [(model.names[i], float(contrib[i])) for i in order]


def write_variance_table(model: PcaModel, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dimension", "eigenvalue", "pct_of_variance", "cumulative_pct_of_variance"])
        for row in explained_variance_table(model):
            w.writerow([row.dimension, repr(row.eigenvalue), repr(row.pct), repr(row.cumulative_pct)])


def write_scores(scores: ScoreMatrix, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *scores.names])
        for day, row in zip(scores.dates, scores.scores):
            w.writerow([day.isoformat(), *(repr(float(v)) for v in row)])


def read_scores(path: str | Path) -> ScoreMatrix:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        dates, rows = [], []
        for row in reader:
            if row:
                dates.append(parse_date(row[0]))
                rows.append([float(v) for v in row[1:]])
    return ScoreMatrix(dates, np.array(rows, dtype=float))
