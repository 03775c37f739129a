"""Hybrid regime detection: PCA, k-means regimes, supervised regime
classifiers and regime-driven strategy backtests."""

from .backtest import (
    AssetReturns,
    BacktestReport,
    RegimeSignal,
    buy_hold,
    correlate_metrics,
    lag_signal,
    performance_stats,
    tactical_allocation,
    tail_hedge,
)
from .cluster import ClusterModel, assign, average_silhouette, fit_regimes, kmeans, select_k
from .config import RunConfig, load_config
from .panel import (
    Panel,
    SplitPanel,
    Standardizer,
    apply_standardizer,
    fit_standardizer,
    impute_forward,
    load_panel,
    split_at,
)
from .pca import PcaModel, ScoreMatrix, explained_variance_table, fit_pca, select_components, top_loadings, transform
from .pipeline import run_pipeline

__version__ = "0.1.0"
