from .cv import CvReport, FoldMetrics, cross_validate, fold_indices, read_cv_table, write_cv_table
from .metrics import metric_accuracy, metric_auc, metric_f1
from .models import (
    DISPLAY_NAMES,
    HyperParams,
    Kind,
    RegimeClassifier,
    fit,
    predict,
    predict_score,
)

__all__ = [
    "CvReport", "FoldMetrics", "cross_validate", "fold_indices", "read_cv_table",
    "write_cv_table", "metric_accuracy", "metric_auc", "metric_f1", "DISPLAY_NAMES",
    "HyperParams", "Kind", "RegimeClassifier", "fit", "predict", "predict_score",
]
