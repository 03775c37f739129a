"""k-fold cross-validation of the regime classifiers."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ClassError, DataError, FoldMissingClass
from .metrics import metric_accuracy, metric_auc, metric_f1
from .models import DISPLAY_NAMES, HyperParams, Kind, encode_labels, fit


@dataclass(frozen=True)
class FoldMetrics:
    auc: float
    accuracy: float
    f1: float


@dataclass(frozen=True)
class CvReport:
    """Fold-averaged metrics. A fold whose validation block holds a single
    class has undefined AUC and F1; those folds are left out of the AUC/F1
    means and appear as NaN in ``per_fold``."""

    kind: Kind
    auc: float
    accuracy: float
    f1: float
    per_fold: list[FoldMetrics] = field(default_factory=list)

    @property
    def name(self) -> str:
        return DISPLAY_NAMES[self.kind]

    def metric(self, name: str) -> float:
        return {"auc": self.auc, "accuracy": self.accuracy, "f1": self.f1}[name.lower()]


def fold_indices(n: int, folds: int, mode: str = "block", seed: int = 0) -> list[np.ndarray]:
    """Validation indices per fold: contiguous time blocks or a seeded shuffle."""
    if folds < 2:
        raise DataError("need at least 2 folds")
    if folds > n:
        raise DataError(f"{folds} folds for {n} samples")
    if mode == "block":
        idx = np.arange(n)
    elif mode == "shuffled":
        idx = np.random.default_rng(seed).permutation(n)
    else:
        raise DataError(f"unknown cv mode {mode!r}")
    return [np.sort(part) for part in np.array_split(idx, folds)]


def _metric_or_nan(fn, *args):
    try:
        return fn(*args)
    except ClassError:
        return math.nan


def cross_validate(kind, scores, labels, folds: int = 10, seed: int = 0, mode: str = "block",
                   hyper: HyperParams | None = None, threads: int = 1) -> CvReport:
    kind = Kind(kind)
    X = np.asarray(getattr(scores, "scores", scores), dtype=float)
    labels = np.asarray(labels).astype(int)
    _, classes = encode_labels(labels)
    parts = fold_indices(len(X), folds, mode, seed)

    for i, val in enumerate(parts, start=1):
        mask = np.ones(len(X), dtype=bool)
        mask[val] = False
        present = set(np.unique(labels[mask]).tolist())
        if present != set(classes):
            raise FoldMissingClass(
                f"fold {i}: training side lacks class(es) {sorted(set(classes) - present)}")

    def run(val):
        mask = np.ones(len(X), dtype=bool)
        mask[val] = False
        model = fit(kind, X[mask], labels[mask], hyper)
        truth = labels[val]
        pred = model.predict(X[val])
        return FoldMetrics(
            _metric_or_nan(metric_auc, model.predict_score(X[val]), truth, classes[1]),
            metric_accuracy(pred, truth),
            _metric_or_nan(metric_f1, pred, truth, classes[1]),
        )

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            per_fold = list(pool.map(run, parts))
    else:
        per_fold = [run(val) for val in parts]

    def mean(attr):
        vals = [getattr(f, attr) for f in per_fold if not math.isnan(getattr(f, attr))]
        if not vals:
            raise ClassError(f"{attr} undefined on every fold (each validation block has one class)")
        return float(np.mean(vals))

    return CvReport(kind, mean("auc"), mean("accuracy"), mean("f1"), per_fold)


def write_cv_table(reports: list[CvReport], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "AUC", "accuracy", "F1"])
        for r in reports:
            w.writerow([r.name, repr(r.auc), repr(r.accuracy), repr(r.f1)])


def read_cv_table(path: str | Path) -> list[CvReport]:
    by_name = {v: k for k, v in DISPLAY_NAMES.items()}
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(CvReport(by_name[row["model"]], float(row["AUC"]),
                                float(row["accuracy"]), float(row["F1"])))
    return out
