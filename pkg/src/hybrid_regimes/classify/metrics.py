"""AUC, accuracy and F1 with regime 2 (the larger class id) as positive."""
from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

from ..errors import ClassError

POSITIVE = 2


def _positive_mask(truth, positive):
    truth = np.asarray(truth)
    pos = truth == positive
    if pos.all() or not pos.any():
        raise ClassError("metric needs both classes present in the truth labels")
    return pos


def metric_auc(scores, truth, positive: int = POSITIVE) -> float:
    """Mann-Whitney statistic; tied scores get half credit."""
    pos = _positive_mask(truth, positive)
    ranks = rankdata(np.asarray(scores, dtype=float))
    n_pos, n_neg = pos.sum(), (~pos).sum()
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def metric_accuracy(predicted, truth) -> float:
    predicted, truth = np.asarray(predicted), np.asarray(truth)
    if len(truth) == 0:
        raise ClassError("accuracy of an empty set")
    return float(np.mean(predicted == truth))


def metric_f1(predicted, truth, positive: int = POSITIVE) -> float:
    pos = _positive_mask(truth, positive)
    pred = np.asarray(predicted) == positive
    tp = np.sum(pred & pos)
    fp = np.sum(pred & ~pos)
    fn = np.sum(~pred & pos)
    return float(2 * tp / (2 * tp + fp + fn))
