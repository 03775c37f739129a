"""Command-line front end.

    hybrid-regimes [--config PATH] [--seed N] [--threads N] [--paper-defaults]
                   [--out DIR] {synth,ingest,pca,cluster,train,backtest,run,config}

Each command prints one ``key=value`` summary line. Exit codes: 0 success,
2 configuration error, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from . import pipeline
from .config import RunConfig, load_config
from .errors import ConfigError, RegimeError

COMMANDS = ("synth", "ingest", "pca", "cluster", "train", "backtest", "run", "config")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybrid-regimes", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")
    p.add_argument("--paper-defaults", action="store_true",
                   help="force every published parameter value")
    p.add_argument("--out", help="override the output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.paper_defaults:
        cfg = cfg.with_published_defaults()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.out is not None:
        overrides["out_dir"] = args.out
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def _line(command: str, **fields) -> str:
    return " ".join([f"command={command}", "status=ok", *(f"{k}={v}" for k, v in fields.items())])


def execute(command: str, cfg: RunConfig) -> str:
    if command == "config":
        sys.stdout.write(cfg.to_json())
        return _line(command, digest=cfg.digest())
    if command == "synth":
        return _line(command, **pipeline.synth_stage(cfg))
    if command == "ingest":
        split = pipeline.ingest_stage(cfg)
        return _line(command, n_train=split.train.shape[0], n_test=split.test.shape[0],
                     n_series=split.train.shape[1], run_dir=cfg.run_dir())
    if command == "pca":
        model, _, _ = pipeline.pca_stage(cfg)
        return _line(command, n_selected=model.n_selected, run_dir=cfg.run_dir())
    if command == "cluster":
        m = pipeline.cluster_stage(cfg)
        return _line(command, k=m.k, silhouette=f"{m.silhouette_by_k[m.k]:.6f}",
                     run_dir=cfg.run_dir())
    if command == "train":
        reports, _ = pipeline.train_stage(cfg)
        best = max(reports, key=lambda r: r.accuracy)
        return _line(command, models=len(reports), best=best.kind.value,
                     best_accuracy=f"{best.accuracy:.6f}", run_dir=cfg.run_dir())
    if command == "backtest":
        out = pipeline.backtest_stage(cfg)
        return _line(command, **out["summary"], run_dir=cfg.run_dir())
    if command == "run":
        res = pipeline.run_pipeline(cfg)
        return _line(command, k=res["cluster"].k, n_selected=res["pca"].n_selected,
                     **res["backtest"]["summary"], run_dir=res["run_dir"])
    raise ConfigError(f"unknown command {command!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        print(execute(args.command, cfg))
    except RegimeError as exc:
        stage = exc.stage or args.command
        print(f"command={args.command} status=error stage={stage} code={exc.exit_code} "
              f"error={type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
