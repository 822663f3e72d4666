"""Regenerate the frozen synthetic BTC/ETH daily OHLCV fixture.

The series are simulated, not vendor data: a shared stochastic-volatility
regime drives both assets, ETH returns load on BTC returns, and traded
volumes share a slow common factor. A handful of rows carry Yahoo-style
``null`` values so the skip path is exercised.

    python tools/generate_fixture.py [--out src/cryptodr/fixtures]
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
from datetime import date, timedelta
from pathlib import Path

import numpy as np

SEED = 59
START = date(2017, 12, 15)
END = date(2021, 1, 31)
HEADER = ["Date", "Open", "High", "Low", "Close", "Adj Close", "Volume"]
NULL_ROWS = {"BTC": [date(2018, 7, 3), date(2019, 10, 18)], "ETH": [date(2020, 4, 9)]}


def simulate(seed: int = SEED):
    rng = np.random.default_rng(seed)
    n = (END - START).days + 1
    days = [START + timedelta(days=i) for i in range(n)]
    t = np.arange(n) / n

    # shared log-volatility regime
    h = np.empty(n)
    h[0] = 0.0
    for i in range(1, n):
        h[i] = 0.97 * h[i - 1] + 0.18 * rng.standard_normal()
    vol_b = 0.038 * np.exp(0.5 * h)
    vol_e = 0.048 * np.exp(0.5 * h + 0.05 * rng.standard_normal(n))

    # slow drift: 2018 drawdown, 2019 recovery, late-2020 rally
    drift = 0.0025 * np.sin(2 * np.pi * (t * 1.1 + 0.35)) + 0.003 * (t > 0.85)
    z_b = rng.standard_normal(n)
    z_e = 0.82 * z_b + np.sqrt(1 - 0.82**2) * rng.standard_normal(n)
    r_b = drift + vol_b * z_b
    r_e = 1.1 * drift + vol_e * z_e

    def bars(r, vol, p0, v_level, v_common, v_idio_scale):
        close = p0 * np.exp(np.cumsum(r))
        prev = np.concatenate([[p0], close[:-1]])
        open_ = prev * np.exp(0.002 * rng.standard_normal(n))
        # lognormal scatter gives the daily range heavier tails than the return
        upper = np.exp(np.abs(rng.standard_normal(n)) * 0.6 * vol * np.exp(1.2 * rng.standard_normal(n)))
        lower = np.exp(-np.abs(rng.standard_normal(n)) * 0.6 * vol * np.exp(1.2 * rng.standard_normal(n)))
        high = np.maximum(open_, close) * upper
        low = np.minimum(open_, close) * lower
        log_v = (
            v_level
            + v_common
            + 1.0 * np.log(close / p0)
            + 0.3 * (np.abs(r) / vol.mean())
            + v_idio_scale * rng.standard_normal(n)
        )
        return open_, high, low, close, np.exp(log_v)

    # slow common volume factor: adoption trend plus a persistent AR(1)
    f = np.empty(n)
    f[0] = 0.0
    for i in range(1, n):
        f[i] = 0.995 * f[i - 1] + 0.06 * rng.standard_normal()
    common = 0.8 * t + 2.0 * f

    btc = bars(r_b, vol_b, 17500.0, np.log(9.0e9), common, 0.08)
    eth = bars(r_e, vol_e, 690.0, np.log(2.5e9), 1.05 * common, 0.08)
    return days, btc, eth


def write_csv(path: Path, days, ohlcv, asset: str) -> None:
    o, h, lo, c, v = ohlcv
    nulls = set(NULL_ROWS.get(asset, []))
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for i, d in enumerate(days):
            if d in nulls:
                w.writerow([d.isoformat()] + ["null"] * 6)
                continue
            w.writerow(
                [d.isoformat(), f"{o[i]:.6f}", f"{h[i]:.6f}", f"{lo[i]:.6f}", f"{c[i]:.6f}", f"{c[i]:.6f}", f"{v[i]:.0f}"]
            )


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "src/cryptodr/fixtures")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    days, btc, eth = simulate()
    files = {"BTC-USD.csv": btc, "ETH-USD.csv": eth}
    for name, data in files.items():
        write_csv(args.out / name, days, data, name.split("-")[0])
    manifest = {
        "generator": "tools/generate_fixture.py",
        "seed": SEED,
        "files": {name: hashlib.sha256((args.out / name).read_bytes()).hexdigest() for name in sorted(files)},
    }
    (args.out / "MANIFEST.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(json.dumps(manifest, indent=2))


if __name__ == "__main__":
    main()
