"""Daily strategy simulation and performance statistics.

Timing: the regime predicted from panel data dated ``t`` sets the position
held over the next trading day. :func:`lag_signal` does that shift, so every
strategy function here takes a signal that is already aligned with the
returns it is applied to. Transaction costs are zero.
"""
from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import betainc

from .errors import DataError, DateMisalignment, MissingAsset, ZeroVariance
from .panel import _frozen, parse_date

TRADING_DAYS = 252
ASSETS = ("sp500", "crude", "gold", "bonds")

STATS = (
    "cumulative_return_pct",
    "annualized_return_pct",
    "annualized_vol_pct",
    "skewness",
    "kurtosis",
    "alpha_pct",
    "beta",
    "max_drawdown_pct",
)

# position weights per regime, in ASSETS order
TACTICAL_WEIGHTS = {
    1: (0.6, 0.0, 0.0, 0.4),
    2: (-0.25, -0.25, 0.25, 0.25),
}


@dataclass(frozen=True, eq=False)
class AssetReturns:
    dates: tuple[dt.date, ...]
    returns: dict[str, np.ndarray]

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "returns", {k: _frozen(v) for k, v in self.returns.items()})
        for name, r in self.returns.items():
            if len(r) != len(self.dates):
                raise DateMisalignment(f"asset {name!r} has {len(r)} returns for {len(self.dates)} dates")
            if np.isnan(r).any():
                raise DataError(f"asset {name!r} has missing returns")

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.returns[name]
        except KeyError:
            raise MissingAsset(f"no return series for {name!r}") from None

    def window(self, start: dt.date | None = None, end: dt.date | None = None) -> "AssetReturns":
        keep = [i for i, d in enumerate(self.dates)
                if (start is None or d >= start) and (end is None or d <= end)]
        return AssetReturns([self.dates[i] for i in keep],
                            {k: v[keep] for k, v in self.returns.items()})


@dataclass(frozen=True, eq=False)
class RegimeSignal:
    """Regime in force on each date (already lagged: decided the day before)."""

    dates: tuple[dt.date, ...]
    regime: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        reg = np.array(self.regime, dtype=int)
        reg.flags.writeable = False
        object.__setattr__(self, "regime", reg)
        if len(reg) != len(self.dates):
            raise DateMisalignment("one regime per date required")
        bad = set(np.unique(reg).tolist()) - {1, 2}
        if bad:
            raise DataError(f"regime values must be 1 or 2, got {sorted(bad)}")


@dataclass(frozen=True, eq=False)
class BacktestReport:
    cumulative_return_pct: float
    annualized_return_pct: float
    annualized_vol_pct: float
    skewness: float
    kurtosis: float
    alpha_pct: float | None
    beta: float | None
    max_drawdown_pct: float
    daily_returns: np.ndarray
    wealth: np.ndarray
    dates: tuple[dt.date, ...] | None = None
    label: str = ""

    def stat(self, name: str) -> float:
        if name not in STATS:
            raise DataError(f"unknown statistic {name!r}")
        return getattr(self, name)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            **{s: getattr(self, s) for s in STATS},
            "dates": [d.isoformat() for d in self.dates] if self.dates else None,
            "daily_returns": self.daily_returns.tolist(),
            "wealth": self.wealth.tolist(),
        }


def load_asset_returns(path: str | Path, date_column: str = "date") -> AssetReturns:
    """CSV with a date column and one fractional-return column per asset."""
    if not Path(path).is_file():
        raise DataError(f"asset returns file {path} not found")
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or date_column not in reader.fieldnames:
            raise DataError(f"{path}: no {date_column!r} column")
        names = [n for n in reader.fieldnames if n != date_column]
        dates, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if None in row or any(v is None for v in row.values()):
                raise DataError(f"{path}:{lineno}: ragged row")
            dates.append(parse_date(row[date_column]))
            try:
                rows.append([float(row[n]) for n in names])
            except ValueError:
                raise DataError(f"{path}:{lineno}: missing or non-numeric return") from None
    order = np.argsort(np.array(dates, dtype="datetime64[D]"), kind="stable")
    dates = [dates[i] for i in order]
    if any(a == b for a, b in zip(dates, dates[1:])):
        raise DataError(f"{path}: duplicate dates")
    values = np.array(rows, dtype=float).reshape(len(dates), len(names))[order]
    return AssetReturns(dates, {n: values[:, j] for j, n in enumerate(names)})


def write_asset_returns(assets: AssetReturns, path: str | Path) -> None:
    names = list(assets.returns)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *names])
        for i, d in enumerate(assets.dates):
            w.writerow([d.isoformat(), *(repr(float(assets.returns[n][i])) for n in names)])


def lag_signal(panel_dates: Sequence[dt.date], regimes, trade_dates: Sequence[dt.date]) -> RegimeSignal:
    """Regime for each trade date from the latest panel date strictly before it.

    Trade dates with no earlier panel row are dropped.
    """
    pd_ = np.array(panel_dates, dtype="datetime64[D]")
    td = np.array(trade_dates, dtype="datetime64[D]")
    pos = np.searchsorted(pd_, td, side="left") - 1
    keep = pos >= 0
    regimes = np.asarray(regimes, dtype=int)
    return RegimeSignal([d for d, k in zip(trade_dates, keep) if k], regimes[pos[keep]])


def _align(signal: RegimeSignal, dates: Sequence[dt.date] | None) -> None:
    if dates is not None and tuple(dates) != signal.dates:
        raise DateMisalignment("signal dates do not match return dates")


def performance_stats(daily, benchmark=None, dates=None, label: str = "",
                      excess_kurtosis: bool = False) -> BacktestReport:
    """Simulate the wealth path (base 100) day by day and summarize it.

    Alpha and beta regress ``daily`` on ``benchmark`` (risk-free rate 0,
    alpha annualized arithmetically). Without a benchmark both are None.
    """
    r = np.asarray(daily, dtype=float)
    n = len(r)
    if n == 0:
        raise DataError("empty return series")
    b = None
    if benchmark is not None:
        b = np.asarray(benchmark, dtype=float)
        if len(b) != n:
            raise DateMisalignment(f"benchmark has {len(b)} returns, strategy {n}")

    wealth = np.empty(n)
    w = peak = 100.0
    r_list = r.tolist()
    b_list = b.tolist() if b is not None else None
    mdd = 0.0
    mean_x = mean_y = cxy = vy = 0.0
    for t in range(n):
        w = w * (1.0 + r_list[t])
        wealth[t] = w
        if w > peak:
            peak = w
        elif (peak - w) / peak > mdd:
            mdd = (peak - w) / peak
        if b is not None:
            # online co-moments (Welford)
            k = t + 1
            x, y = r_list[t], b_list[t]
            dx = x - mean_x
            mean_x += dx / k
            dy = y - mean_y
            mean_y += dy / k
            cxy += dx * (y - mean_y)
            vy += dy * (y - mean_y)

    alpha = beta = None
    if b is not None:
        if not vy > 0:
            raise ZeroVariance("benchmark returns have zero variance; beta undefined")
        beta = float(cxy / vy)
        alpha = float(100.0 * TRADING_DAYS * (mean_x - beta * mean_y))

    growth = w / 100.0
    ann = 100.0 * (growth ** (TRADING_DAYS / n) - 1.0) if growth > 0 else -100.0
    centered = r - r.mean()
    m2 = float(np.mean(centered**2))
    vol = 100.0 * math.sqrt(TRADING_DAYS) * float(np.std(r, ddof=1)) if n > 1 else 0.0
    if m2 > 0:
        skew = float(np.mean(centered**3)) / m2**1.5
        kurt = float(np.mean(centered**4)) / m2**2 - (3.0 if excess_kurtosis else 0.0)
    else:
        skew = kurt = 0.0
    return BacktestReport(
        cumulative_return_pct=float(w),
        annualized_return_pct=float(ann),
        annualized_vol_pct=vol,
        skewness=skew,
        kurtosis=kurt,
        alpha_pct=alpha,
        beta=beta,
        max_drawdown_pct=float(100.0 * mdd),
        daily_returns=_frozen(r),
        wealth=_frozen(wealth),
        dates=tuple(dates) if dates is not None else None,
        label=label,
    )


def _self_benchmark(asset):
    # alpha/beta against a flat benchmark are undefined; report them as None
    return asset if np.var(asset) > 0 else None


def buy_hold(asset, dates=None, label: str = "buy_hold", **kw) -> BacktestReport:
    asset = np.asarray(asset, dtype=float)
    return performance_stats(asset, _self_benchmark(asset), dates, label, **kw)


def tail_hedge(signal: RegimeSignal, asset, dates=None, label: str = "tail_hedge",
               **kw) -> BacktestReport:
    """Long the asset in regime 1, short it in regime 2."""
    _align(signal, dates)
    asset = np.asarray(asset, dtype=float)
    if len(asset) != len(signal.regime):
        raise DateMisalignment(f"{len(asset)} returns for {len(signal.regime)} signal dates")
    daily = np.where(signal.regime == 1, asset, -asset)
    return performance_stats(daily, _self_benchmark(asset), signal.dates, label, **kw)


def tactical_returns(regime, assets: AssetReturns) -> np.ndarray:
    cols = [assets[a] for a in ASSETS]
    out = np.empty(len(regime))
    for t, reg in enumerate(regime):
        w_sp, w_crude, w_gold, w_bonds = TACTICAL_WEIGHTS[int(reg)]
        out[t] = w_sp * cols[0][t] + w_crude * cols[1][t] + w_gold * cols[2][t] + w_bonds * cols[3][t]
    return out


def tactical_allocation(signal: RegimeSignal, assets: AssetReturns, label: str = "tactical",
                        **kw) -> BacktestReport:
    """60/40 S&P 500/bonds in regime 1; equal 25% short S&P 500 and crude,
    long gold and bonds in regime 2. Rebalanced to target every day."""
    _align(signal, assets.dates)
    daily = tactical_returns(signal.regime, assets)
    sp = assets["sp500"]
    return performance_stats(daily, sp if np.var(sp) > 0 else None, signal.dates, label, **kw)


def pearson_p_value(r: float, n: int) -> float:
    """Two-sided p-value of the t statistic r*sqrt((n-2)/(1-r^2)), n-2 dof."""
    df = n - 2
    with np.errstate(divide="ignore"):
        t2 = r * r * df / (1.0 - r * r) if abs(r) < 1 else math.inf
    # P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2)
    return float(betainc(df / 2.0, 0.5, df / (df + t2))) if math.isfinite(t2) else 0.0


def correlate_metrics(cv_reports, reports, metric: str, stat: str) -> tuple[float, float]:
    """Pearson r between a CV metric and a backtest statistic across models."""
    x = np.array([c.metric(metric) for c in cv_reports], dtype=float)
    y = np.array([r.stat(stat) for r in reports], dtype=float)
    if len(x) != len(y):
        raise DataError(f"{len(x)} CV reports but {len(y)} backtest reports")
    if len(x) < 3:
        raise DataError("correlation needs at least 3 models")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise ZeroVariance(f"zero variance in {metric if sxx == 0 else stat}")
    r = float(np.clip(dx @ dy / math.sqrt(sxx * syy), -1.0, 1.0))
    return r, pearson_p_value(r, len(x))


@dataclass(frozen=True)
class CorrelationRow:
    strategy: str
    metric: str
    stat: str
    r: float
    p_value: float


def correlation_table(strategy: str, cv_reports, reports,
                      metrics=("auc", "accuracy", "f1"), stats=STATS) -> list[CorrelationRow]:
    rows = []
    for m in metrics:
        for s in stats:
            try:
                r, p = correlate_metrics(cv_reports, reports, m, s)
            except ZeroVariance:
                r = p = math.nan
            rows.append(CorrelationRow(strategy, m, s, r, p))
    return rows


# ---------------------------------------------------------------- output


def write_report_json(report: BacktestReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=1) + "\n")


def write_summary(rows: list[tuple[str, BacktestReport]], path: str | Path,
                  with_alpha_beta: bool = True) -> None:
    """Summary table, one row per (name, report), columns as in the result tables."""
    cols = [s for s in STATS if with_alpha_beta or s not in ("alpha_pct", "beta")]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", *cols])
        for name, rep in rows:
            w.writerow([name, *("" if getattr(rep, c) is None else repr(getattr(rep, c)) for c in cols)])


def write_wealth(report: BacktestReport, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "wealth"])
        dates = report.dates or range(1, len(report.wealth) + 1)
        for d, v in zip(dates, report.wealth):
            w.writerow([d.isoformat() if hasattr(d, "isoformat") else d, repr(float(v))])


def write_correlations(rows: list[CorrelationRow], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strategy", "metric", "stat", "r", "p_value"])
        for r in rows:
            w.writerow([r.strategy, r.metric, r.stat, repr(r.r), repr(r.p_value)])
