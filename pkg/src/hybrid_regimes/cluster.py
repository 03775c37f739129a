"""k-means regime clustering, silhouette-based choice of k, and
nearest-centroid assignment of new observations.

Regime ids are 1-based and canonical: regime 1 is the largest training
cluster, then descending by size.
"""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DataError, DimensionMismatch, NumericalError, SingleCluster, TooFewDistinctPoints
from .panel import _frozen
from .pca import ScoreMatrix

logger = logging.getLogger(__name__)

MAX_ITER = 300


@dataclass(frozen=True, eq=False)
class ClusterModel:
    k: int
    centroids: np.ndarray
    train_labels: np.ndarray
    inertia: float
    silhouette_by_k: dict[int, float] = field(default_factory=dict)
    n_iter: int = 0

    def __post_init__(self):
        object.__setattr__(self, "centroids", _frozen(self.centroids))
        labels = np.array(self.train_labels, dtype=int)
        labels.flags.writeable = False
        object.__setattr__(self, "train_labels", labels)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "centroids": self.centroids.tolist(),
            "inertia": self.inertia,
            "n_iter": self.n_iter,
            "silhouette_by_k": {str(k): v for k, v in self.silhouette_by_k.items()},
            "train_labels": self.train_labels.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClusterModel":
        return cls(int(d["k"]), np.asarray(d["centroids"], dtype=float),
                   np.asarray(d["train_labels"], dtype=int), float(d["inertia"]),
                   {int(k): float(v) for k, v in d["silhouette_by_k"].items()},
                   int(d.get("n_iter", 0)))


def _as_array(scores) -> np.ndarray:
    X = scores.scores if isinstance(scores, ScoreMatrix) else scores
    X = np.asarray(X, dtype=float)
    return X[:, None] if X.ndim == 1 else X


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def _lloyd(X: np.ndarray, k: int, rng: np.random.Generator, max_iter: int):
    n = len(X)
    C = X[rng.choice(n, size=k, replace=False)].copy()
    labels = None
    prev_inertia = np.inf
    for it in range(1, max_iter + 1):
        d2 = _sq_dists(X, C)
        new = np.argmin(d2, axis=1)
        counts = np.bincount(new, minlength=k)
        for j in np.flatnonzero(counts == 0):
            # re-seed an empty cluster at the point farthest from its centroid
            own = d2[np.arange(n), new]
            own[counts[new] <= 1] = -1.0
            far = int(np.argmax(own))
            counts[new[far]] -= 1
            new[far] = j
            counts[j] = 1
            d2[far, j] = 0.0
        if labels is not None and np.array_equal(new, labels):
            return C, labels, prev_inertia, it - 1
        labels = new
        C = np.zeros_like(C)
        np.add.at(C, labels, X)
        C /= np.bincount(labels, minlength=k)[:, None]
        inertia = float(((X - C[labels]) ** 2).sum())
        if inertia > prev_inertia * (1 + 1e-12) + 1e-12:
            raise NumericalError(f"k-means inertia increased at iteration {it}")
        prev_inertia = inertia
    logger.warning("k-means did not converge in %d iterations", max_iter)
    return C, labels, prev_inertia, max_iter


def _canonicalize(X: np.ndarray, C: np.ndarray, labels: np.ndarray):
    k = len(C)
    sizes = np.bincount(labels, minlength=k)
    # descending size, ties by lexicographic centroid order
    order = sorted(range(k), key=lambda j: (-sizes[j], tuple(C[j])))
    C = C[order]
    labels = np.argmin(_sq_dists(X, C), axis=1)
    inertia = float(((X - C[labels]) ** 2).sum())
    return C, labels + 1, inertia


def _restart_rng(seed: int, restart: int) -> np.random.Generator:
    return np.random.default_rng([seed, restart])


def kmeans(scores, k: int, n_init: int = 100, seed: int = 0,
           max_iter: int = MAX_ITER, threads: int = 1) -> ClusterModel:
    """Best of ``n_init`` Lloyd runs by inertia.

    Restart ``i`` draws its initial centroids from a generator seeded with
    ``(seed, i)``, so the result does not depend on ``threads``.
    """
    X = _as_array(scores)
    if k < 2:
        raise DataError("k must be at least 2")
    if n_init < 1:
        raise DataError("n_init must be at least 1")
    n_distinct = len(np.unique(X, axis=0))
    if k > n_distinct:
        raise TooFewDistinctPoints(f"k={k} exceeds the {n_distinct} distinct points")

    def run(i):
        return _lloyd(X, k, _restart_rng(seed, i), max_iter)

    if threads > 1 and n_init > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run, range(n_init)))
    else:
        results = [run(i) for i in range(n_init)]
    best = min(range(n_init), key=lambda i: results[i][2])
    C, labels, _, n_iter = results[best]
    C, labels, inertia = _canonicalize(X, C, labels)
    return ClusterModel(k, C, labels, inertia, {}, n_iter)


def average_silhouette(scores, labels, chunk: int = 512) -> float:
    """Mean silhouette width with euclidean distances; singletons score 0."""
    X = _as_array(scores)
    labels = np.asarray(labels)
    uniq, lab = np.unique(labels, return_inverse=True)
    if len(uniq) < 2:
        raise SingleCluster("silhouette needs at least two clusters")
    n, k = len(X), len(uniq)
    sizes = np.bincount(lab, minlength=k).astype(float)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), lab] = 1.0
    s = np.empty(n)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        sums = cdist(X[start:stop], X) @ onehot
        own = lab[start:stop]
        rows = np.arange(stop - start)
        own_size = sizes[own]
        a = np.where(own_size > 1, sums[rows, own] / np.maximum(own_size - 1, 1), 0.0)
        means = sums / sizes
        means[rows, own] = np.inf
        b = means.min(axis=1)
        denom = np.maximum(a, b)
        with np.errstate(invalid="ignore", divide="ignore"):
            si = np.where(denom > 0, (b - a) / denom, 0.0)
        si[own_size == 1] = 0.0
        s[start:stop] = si
    return float(s.mean())


def _fit_range(X, k_min, k_max, n_init, seed, max_iter, threads):
    if k_min > k_max:
        raise DataError(f"empty k range {k_min}..{k_max}")
    ks = range(max(k_min, 2), k_max + 1)
    if not ks:
        raise DataError("k=1 has no silhouette; k range must include k >= 2")
    if k_max > len(X) - 1:
        raise DataError(f"k_max={k_max} must be below the number of points {len(X)}")
    models = {k: kmeans(X, k, n_init, seed, max_iter, threads) for k in ks}
    widths = {k: average_silhouette(X, m.train_labels) for k, m in models.items()}
    # max width, ties toward smaller k
    best = min(widths, key=lambda k: (-widths[k], k))
    return best, widths, models


def select_k(scores, k_min: int = 2, k_max: int = 6, n_init: int = 100, seed: int = 0,
             max_iter: int = MAX_ITER, threads: int = 1) -> tuple[int, dict[int, float]]:
    """Return the k with the largest average silhouette and the width per k.

    k=1 is accepted in the range but never selected.
    """
    best, widths, _ = _fit_range(_as_array(scores), k_min, k_max, n_init, seed, max_iter, threads)
    return best, widths


def fit_regimes(scores, k_min: int = 2, k_max: int = 6, n_init: int = 100, seed: int = 0,
                max_iter: int = MAX_ITER, threads: int = 1) -> ClusterModel:
    """select_k followed by the k-means model for the chosen k."""
    best, widths, models = _fit_range(_as_array(scores), k_min, k_max, n_init, seed,
                                      max_iter, threads)
    m = models[best]
    return ClusterModel(m.k, m.centroids, m.train_labels, m.inertia, widths, m.n_iter)


def assign(model: ClusterModel, scores) -> np.ndarray:
    X = _as_array(scores)
    if X.shape[1] != model.centroids.shape[1]:
        raise DimensionMismatch(
            f"scores have {X.shape[1]} dimensions, centroids {model.centroids.shape[1]}")
    return np.argmin(_sq_dists(X, model.centroids), axis=1) + 1


def write_silhouettes(model: ClusterModel, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "average_silhouette_width"])
        for k in sorted(model.silhouette_by_k):
            w.writerow([k, repr(model.silhouette_by_k[k])])


def write_labels(dates, labels, path: str | Path, column: str = "regime") -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", column])
        for day, lab in zip(dates, labels):
            w.writerow([day.isoformat(), int(lab)])


def read_labels(path: str | Path):
    from .panel import parse_date

    dates, labels = [], []
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            if row:
                dates.append(parse_date(row[0]))
                labels.append(int(row[1]))
    return dates, np.array(labels, dtype=int)
