"""End-to-end pipeline built from file-backed stages.

Each stage reads its inputs from the run directory (or the configured input
files), writes plain CSV/JSON artifacts, and returns the in-memory results.
Only training data ever feeds the standardizer, PCA, clustering and
classifier fits; test data is transformed with those frozen models.
"""
from __future__ import annotations

import contextlib
import json
import logging
from pathlib import Path

import numpy as np

from . import backtest as bt
from . import cluster as cl
from . import panel as pn
from . import pca as pc
from .classify import DISPLAY_NAMES, Kind, RegimeClassifier, cross_validate, read_cv_table, write_cv_table
from .classify import fit as fit_classifier
from .config import RunConfig
from .errors import MissingArtifact, NumericalError, RegimeError
from .synth import generate

logger = logging.getLogger(__name__)

PRODUCER = {
    "train.csv": "ingest",
    "test.csv": "ingest",
    "pca_model.json": "pca",
    "scores_train.csv": "pca",
    "scores_test.csv": "pca",
    "cluster_model.json": "cluster",
    "regimes_train.csv": "cluster",
    "cv_report.csv": "train",
    "classifiers": "train",
}


@contextlib.contextmanager
def stage(name: str):
    try:
        yield
    except RegimeError as exc:
        if exc.stage is None:
            exc.stage = name
        raise
    except np.linalg.LinAlgError as exc:
        raise NumericalError(str(exc), stage=name) from exc


def _need(run_dir: Path, name: str) -> Path:
    path = run_dir / name
    if not path.exists():
        raise MissingArtifact(f"missing {path}; run `{PRODUCER[name]}` first")
    return path


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _prepare(cfg: RunConfig) -> Path:
    run_dir = cfg.run_dir()
    run_dir.mkdir(parents=True, exist_ok=True)
    # threads and out_dir are left out so reruns stay byte-identical
    _write_json(run_dir / "config.json", cfg.hashed_dict())
    return run_dir


def synth_stage(cfg: RunConfig) -> dict:
    with stage("synth"):
        market = generate(cfg.synth, cfg.seed, cfg.split)
        for key in ("panel_path", "assets_path", "truth_path"):
            Path(getattr(cfg, key)).parent.mkdir(parents=True, exist_ok=True)
        pn.write_panel(market.panel, cfg.panel_path, cfg.date_column)
        bt.write_asset_returns(market.assets, cfg.assets_path)
        cl.write_labels(market.panel.dates, market.truth, cfg.truth_path)
        return {"n_days": len(market.truth), "crisis_share": round(float(np.mean(market.truth == 2)), 4),
                "panel": cfg.panel_path}


def ingest_stage(cfg: RunConfig) -> pn.SplitPanel:
    run_dir = _prepare(cfg)
    with stage("ingest"):
        raw = pn.load_panel(cfg.panel_path, cfg.date_column)
        filled = pn.impute_forward(raw, fill_leading=cfg.fill_leading)
    with stage("split"):
        split = pn.split_at(filled, cfg.split)
    with stage("ingest"):
        pn.write_panel(split.train, run_dir / "train.csv", cfg.date_column)
        pn.write_panel(split.test, run_dir / "test.csv", cfg.date_column)
        _write_json(run_dir / "ingest.json", {
            "n_train": split.train.shape[0], "n_test": split.test.shape[0],
            "n_series": split.train.shape[1], "n_imputed": int(raw.missing.sum()),
            "split_date": cfg.split_date,
        })
    return split


def pca_stage(cfg: RunConfig):
    run_dir = _prepare(cfg)
    with stage("pca"):
        train = pn.load_panel(_need(run_dir, "train.csv"), cfg.date_column)
        test = pn.load_panel(_need(run_dir, "test.csv"), cfg.date_column)
        std = pn.fit_standardizer(train)
        z_train = pn.apply_standardizer(std, train)
        z_test = pn.apply_standardizer(std, test)
        model = pc.fit_pca(z_train, std, cfg.variance_threshold)
        s_train = pc.transform(model, z_train)
        s_test = pc.transform(model, z_test)
        _write_json(run_dir / "pca_model.json", model.to_dict())
        pc.write_variance_table(model, run_dir / "explained_variance.csv")
        pc.write_scores(s_train, run_dir / "scores_train.csv")
        pc.write_scores(s_test, run_dir / "scores_test.csv")
        with (run_dir / "top_loadings.csv").open("w") as fh:
            fh.write("dimension,rank,column,contribution\n")
            for dim in range(1, min(2, len(model.names)) + 1):
                for rank, (name, c) in enumerate(pc.top_loadings(model, dim, 4), start=1):
                    fh.write(f"{dim},{rank},{name},{c!r}\n")
    return model, s_train, s_test


def cluster_stage(cfg: RunConfig) -> cl.ClusterModel:
    run_dir = _prepare(cfg)
    with stage("cluster"):
        scores = pc.read_scores(_need(run_dir, "scores_train.csv"))
        model = cl.fit_regimes(scores, cfg.k_min, cfg.k_max, cfg.n_init, cfg.seed,
                               cfg.max_iter, cfg.threads)
        _write_json(run_dir / "cluster_model.json", model.to_dict())
        cl.write_silhouettes(model, run_dir / "silhouette_by_k.csv")
        cl.write_labels(scores.dates, model.train_labels, run_dir / "regimes_train.csv")
    return model


def train_stage(cfg: RunConfig):
    run_dir = _prepare(cfg)
    with stage("train"):
        scores = pc.read_scores(_need(run_dir, "scores_train.csv"))
        _, labels = cl.read_labels(_need(run_dir, "regimes_train.csv"))
        out = run_dir / "classifiers"
        out.mkdir(exist_ok=True)
        reports, models = [], {}
        for name in cfg.classifiers:
            kind = Kind(name)
            reports.append(cross_validate(kind, scores, labels, cfg.cv_folds, cfg.seed,
                                          cfg.cv_mode, cfg.hyper, cfg.threads))
            models[kind] = fit_classifier(kind, scores, labels, cfg.hyper)
            _write_json(out / f"{kind.value}.json", models[kind].to_dict())
        write_cv_table(reports, run_dir / "cv_report.csv")
        with (run_dir / "cv_folds.csv").open("w") as fh:
            fh.write("model,fold,auc,accuracy,f1\n")
            for r in reports:
                for i, f in enumerate(r.per_fold, start=1):
                    fh.write(f"{r.name},{i},{f.auc!r},{f.accuracy!r},{f.f1!r}\n")
    return reports, models


def _load_classifiers(cfg: RunConfig, run_dir: Path) -> dict[Kind, RegimeClassifier]:
    folder = _need(run_dir, "classifiers")
    models = {}
    for name in cfg.classifiers:
        path = folder / f"{name}.json"
        if not path.exists():
            raise MissingArtifact(f"missing {path}; run `train` first")
        models[Kind(name)] = RegimeClassifier.from_dict(json.loads(path.read_text()))
    return models


def backtest_stage(cfg: RunConfig) -> dict:
    run_dir = _prepare(cfg)
    with stage("backtest"):
        cv_reports = read_cv_table(_need(run_dir, "cv_report.csv"))
        models = _load_classifiers(cfg, run_dir)
        scores = pc.read_scores(_need(run_dir, "scores_test.csv"))
        assets = bt.load_asset_returns(cfg.assets_path, cfg.date_column)
        window = assets.window(start=scores.dates[0])
        kinds = list(models)
        cv_by_kind = {r.kind: r for r in cv_reports}
        preds = {k: m.predict(scores) for k, m in models.items()}

        with (run_dir / "predictions_test.csv").open("w") as fh:
            fh.write("date," + ",".join(k.value for k in kinds) + "\n")
            for i, d in enumerate(scores.dates):
                fh.write(d.isoformat() + "," + ",".join(str(int(preds[k][i])) for k in kinds) + "\n")

        signals = {k: bt.lag_signal(scores.dates, preds[k], window.dates) for k in kinds}
        sig_dates = signals[kinds[0]].dates
        if not sig_dates:
            raise MissingArtifact("no asset returns after the first test date")
        trade = window.window(start=sig_dates[0])
        kw = {"excess_kurtosis": cfg.excess_kurtosis}

        rep_dir = run_dir / "reports"
        wealth_dir = run_dir / "wealth"
        rep_dir.mkdir(exist_ok=True)
        wealth_dir.mkdir(exist_ok=True)

        def emit(tag, rep):
            bt.write_report_json(rep, rep_dir / f"{tag}.json")
            bt.write_wealth(rep, wealth_dir / f"{tag}.csv")

        results: dict[str, dict[str, bt.BacktestReport]] = {}
        benchmarks = []
        bench_assets = list(dict.fromkeys([*cfg.tail_hedge_assets, *(["sp500"] if cfg.tactical else [])]))
        for a in bench_assets:
            rep = bt.buy_hold(trade[a], trade.dates, f"buy_hold:{a}", **kw)
            benchmarks.append((a, rep))
            emit(f"buy_hold__{a}", rep)
        bt.write_summary(benchmarks, run_dir / "buy_hold.csv", with_alpha_beta=False)

        correlations = []
        strategies = [(f"tail_hedge_{a}", a) for a in cfg.tail_hedge_assets]
        if cfg.tactical:
            strategies.append(("tactical", None))
        for strat, asset in strategies:
            per_model = {}
            for k in kinds:
                label = f"{strat}:{k.value}"
                if asset is None:
                    rep = bt.tactical_allocation(signals[k], trade, label, **kw)
                else:
                    rep = bt.tail_hedge(signals[k], trade[asset], trade.dates, label, **kw)
                per_model[k] = rep
                emit(f"{strat}__{k.value}", rep)
            results[strat] = per_model
            bt.write_summary([(DISPLAY_NAMES[k], per_model[k]) for k in kinds],
                             run_dir / f"{strat}.csv")
            if len(kinds) >= 3:
                correlations += bt.correlation_table(
                    strat, [cv_by_kind[k] for k in kinds], [per_model[k] for k in kinds])
        bt.write_correlations(correlations, run_dir / "correlations.csv")

        summary = {"strategies": len(strategies), "models": len(kinds), "days": len(trade.dates)}
        truth_path = Path(cfg.truth_path)
        if truth_path.exists():
            t_dates, truth = cl.read_labels(truth_path)
            lookup = dict(zip(t_dates, truth))
            if all(d in lookup for d in scores.dates):
                t = np.array([lookup[d] for d in scores.dates])
                agreement = {k.value: float(np.mean(preds[k] == t)) for k in kinds}
                _write_json(run_dir / "recovery.json", {"out_of_sample_agreement": agreement})
                summary["min_agreement"] = round(min(agreement.values()), 4)
    return {"benchmarks": dict(benchmarks), "strategies": results,
            "correlations": correlations, "summary": summary}


def run_pipeline(cfg: RunConfig) -> dict:
    split = ingest_stage(cfg)
    model, _, _ = pca_stage(cfg)
    clusters = cluster_stage(cfg)
    cv_reports, classifiers = train_stage(cfg)
    bt_out = backtest_stage(cfg)
    return {
        "split": split,
        "pca": model,
        "cluster": clusters,
        "cv_reports": cv_reports,
        "classifiers": classifiers,
        "backtest": bt_out,
        "run_dir": cfg.run_dir(),
    }
