import datetime as dt

import numpy as np

from hybrid_regimes.panel import Panel


def make_dates(n, start=dt.date(2020, 1, 1)):
    return [start + dt.timedelta(days=i) for i in range(n)]


def make_panel(values, names=None, start=dt.date(2020, 1, 1)):
    values = np.atleast_2d(np.asarray(values, dtype=float))
    names = names or [f"c{j}" for j in range(values.shape[1])]
    return Panel(make_dates(len(values), start), values, names)
