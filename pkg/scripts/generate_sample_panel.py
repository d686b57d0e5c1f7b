"""Regenerate the bundled synthetic price panel and example config.

The panel is not market data: 12 tickers are simulated from a seeded
three-factor model with small positive drifts, weekdays only, starting
2018-01-02.  Rerunning this script reproduces the files byte for byte.
"""

from __future__ import annotations

import pathlib
from datetime import date, timedelta

import numpy as np

OUT_DIR = pathlib.Path(__file__).resolve().parent.parent / "src" / "wctsv" / "data"
N_DAYS = 330
N_ASSETS = 12
SEED = 20180102


def weekdays(start: date, count: int) -> list[date]:
    days = []
    d = start
    while len(days) < count:
        if d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    return days


def main() -> None:
    rng = np.random.default_rng(SEED)
    loadings = rng.normal(scale=0.6, size=(N_ASSETS, 3))
    drift = rng.uniform(1e-4, 6e-4, size=N_ASSETS)
    idio = rng.uniform(0.004, 0.009, size=N_ASSETS)
    start_px = rng.uniform(20.0, 80.0, size=N_ASSETS)

    factors = rng.normal(scale=0.006, size=(N_DAYS - 1, 3))
    noise = rng.normal(size=(N_DAYS - 1, N_ASSETS)) * idio
    returns = drift + factors @ loadings.T + noise

    prices = np.empty((N_DAYS, N_ASSETS))
    prices[0] = start_px
    for k in range(1, N_DAYS):
        prices[k] = prices[k - 1] * (1.0 + returns[k - 1])
    assert (prices > 0).all()

    days = weekdays(date(2018, 1, 2), N_DAYS)
    tickers = [f"SYN{i + 1:02d}" for i in range(N_ASSETS)]

    OUT_DIR.mkdir(parents=True, exist_ok=True)
    lines = ["date," + ",".join(tickers)]
    for day, row in zip(days, prices):
        cells = ",".join(f"{px:.6f}" for px in row)
        lines.append(f"{day.isoformat()},{cells}")
    (OUT_DIR / "sample_prices.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    config = """\
# Example backtest settings for the bundled synthetic panel.
window = 252   # rolling estimation window; 755 is the other documented choice
models = MV, TSV, M_TSV_S, EEP_TSV, EEP_TSV_S
t = -0.003     # threshold loss, i.e. a target return of 0.003
lambda = 0.015
nu = -0.001
ridge = auto
seed = 0
"""
    (OUT_DIR / "sample_config.txt").write_text(config, encoding="utf-8")
    print(f"wrote {OUT_DIR / 'sample_prices.csv'} ({N_DAYS} rows, {N_ASSETS} tickers)")
    print(f"wrote {OUT_DIR / 'sample_config.txt'}")


if __name__ == "__main__":
    main()
