"""Synthetic economic panel and futures returns with planted regimes.

Regime 1 is a calm state and regime 2 a rarer crisis state. The panel
series shift their mean in the crisis state; asset returns switch between
regime-specific normal distributions, with the S&P 500 and crude falling
and gold and bonds rallying during crises.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .backtest import AssetReturns
from .panel import Panel

# (mean, std) of daily returns in regime 1 and regime 2
ASSET_PARAMS = {
    "sp500": ((0.0005, 0.008), (-0.004, 0.02)),
    "crude": ((0.0004, 0.018), (-0.006, 0.035)),
    "gold": ((0.0001, 0.009), (0.002, 0.012)),
    "bonds": ((0.0001, 0.003), (0.001, 0.005)),
}


@dataclass
class SynthConfig:
    start: str = "2008-01-01"
    n_days: int = 2350
    n_series: int = 24
    n_shifted: int = 12
    shift: float = 2.5
    n_factors: int = 2
    n_sparse: int = 4
    sparse_every: int = 5
    p_stay_calm: float = 0.995
    p_stay_crisis: float = 0.98
    noise_scale: float = 0.01


@dataclass(frozen=True, eq=False)
class SyntheticMarket:
    panel: Panel
    assets: AssetReturns
    truth: np.ndarray


def business_days(start: dt.date, n: int) -> list[dt.date]:
    days = np.busday_offset(np.datetime64(start, "D"), np.arange(n), roll="forward")
    return [d.item() for d in days]


def regime_path(n: int, p_stay_calm: float, p_stay_crisis: float,
                rng: np.random.Generator) -> np.ndarray:
    u = rng.random(n)
    path = np.empty(n, dtype=int)
    state = 1
    for t in range(n):
        stay = p_stay_calm if state == 1 else p_stay_crisis
        if t and u[t] > stay:
            state = 3 - state
        path[t] = state
    return path


def generate(cfg: SynthConfig, seed: int, split_date: dt.date | None = None) -> SyntheticMarket:
    """Draw a market. The regime path is redrawn until crises fill 10-45% of
    the days up to ``split_date`` and at least 2% of the days after it."""
    rng = np.random.default_rng([seed, 0x5EED])
    dates = business_days(dt.date.fromisoformat(cfg.start), cfg.n_days)
    n_train = sum(d <= split_date for d in dates) if split_date else cfg.n_days // 2
    for _ in range(1000):
        truth = regime_path(cfg.n_days, cfg.p_stay_calm, cfg.p_stay_crisis, rng)
        crisis = truth == 2
        train_share = crisis[:n_train].mean()
        if 0.1 <= train_share < 0.45 and crisis.mean() < 0.45 and crisis[n_train:].mean() >= 0.02:
            break
    else:
        raise RuntimeError("could not draw a regime path with crises on both sides of the split")

    S, T = cfg.n_series, cfg.n_days
    direction = np.zeros(S)
    shifted = rng.choice(S, size=cfg.n_shifted, replace=False)
    direction[shifted] = rng.choice([-1.0, 1.0], size=cfg.n_shifted)
    factors = rng.standard_normal((T, cfg.n_factors))
    load = rng.normal(0.0, 0.5, size=(cfg.n_factors, S))
    latent = (cfg.shift * crisis[:, None] * direction + factors @ load
              + rng.standard_normal((T, S)))
    values = cfg.noise_scale * latent
    # low-frequency releases: observed every few days, blank in between
    sparse = rng.choice(np.setdiff1d(np.arange(S), shifted), size=min(cfg.n_sparse, S - cfg.n_shifted),
                        replace=False)
    off_days = np.arange(T) % cfg.sparse_every != 0
    for j in sparse:
        values[off_days, j] = np.nan
    names = [f"series_{j + 1:02d}" for j in range(S)]
    panel = Panel(dates, values, names)

    returns = {}
    for name, (calm, bad) in ASSET_PARAMS.items():
        z = rng.standard_normal(T)
        mu = np.where(crisis, bad[0], calm[0])
        sd = np.where(crisis, bad[1], calm[1])
        returns[name] = mu + sd * z
    return SyntheticMarket(panel, AssetReturns(dates, returns), truth)
