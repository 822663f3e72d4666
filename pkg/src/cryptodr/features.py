"""Per-asset factor construction, standardization and correlation pruning."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import date
from typing import Sequence

import numpy as np

from .errors import (
    AlignmentError,
    DegenerateColumnError,
    DomainError,
    InsufficientDataError,
    ShapeError,
)
from .linalg import correlation_matrix
from .market_data import AlignedPanel, OhlcvBar

VMOM_LAG = 7
VMOM_WINDOW = 22  # the trailing HML sum spans VMOM_WINDOW + 1 bars, divided by VMOM_WINDOW
DEFAULT_PRUNE_THRESHOLD = 0.995

FEATURE_SUFFIXES = ("Close", "Return", "Volume", "HML", "VMOM", "IV")
RESPONSE_SUFFIXES = ("Return", "Volume", "IV")


@dataclass(frozen=True)
class FeatureMatrix:
    """Column-labelled numeric matrix with row dates.

    ``scaler`` maps column name to the (mean, stddev) pair used to
    standardize it, or is empty for raw features. ``dropped`` lists columns
    removed upstream as ``(name, reason)`` pairs.
    """

    dates: tuple[date, ...]
    names: tuple[str, ...]
    values: np.ndarray
    scaler: dict[str, tuple[float, float]] = field(default_factory=dict)
    dropped: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ShapeError(f"values must be 2-D, got shape {values.shape}")
        if values.shape != (len(self.dates), len(self.names)):
            raise ShapeError(
                f"values shape {values.shape} does not match {len(self.dates)} dates x {len(self.names)} columns"
            )
        if len(set(self.names)) != len(self.names):
            raise ShapeError(f"duplicate column names in {self.names}")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def n_rows(self) -> int:
        return len(self.dates)

    @property
    def n_cols(self) -> int:
        return len(self.names)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.names.index(name)]
        except ValueError:
            raise AlignmentError(f"no column named {name!r}") from None

    def select(self, names: Sequence[str]) -> FeatureMatrix:
        missing = [n for n in names if n not in self.names]
        if missing:
            raise AlignmentError(f"missing columns {missing}")
        idx = [self.names.index(n) for n in names]
        scaler = {n: self.scaler[n] for n in names if n in self.scaler}
        return FeatureMatrix(self.dates, tuple(names), self.values[:, idx], scaler, self.dropped)

    def drop(self, names: Sequence[str], reason: str = "") -> FeatureMatrix:
        keep = [n for n in self.names if n not in set(names)]
        out = self.select(keep)
        extra = tuple((n, reason) for n in names if n in self.names)
        return FeatureMatrix(out.dates, out.names, out.values, out.scaler, self.dropped + extra)

    def take_rows(self, mask) -> FeatureMatrix:
        mask = np.asarray(mask)
        idx = np.flatnonzero(mask) if mask.dtype == bool else mask
        return FeatureMatrix(
            tuple(self.dates[i] for i in idx), self.names, self.values[idx], dict(self.scaler), self.dropped
        )

    def window(self, start: date, end: date) -> FeatureMatrix:
        return self.take_rows(np.array([start <= d <= end for d in self.dates], dtype=bool))

    def hstack(self, other: FeatureMatrix) -> FeatureMatrix:
        if self.dates != other.dates:
            raise AlignmentError("cannot join matrices with different dates")
        return FeatureMatrix(
            self.dates,
            self.names + other.names,
            np.hstack([self.values, other.values]),
            {**self.scaler, **other.scaler},
            self.dropped + other.dropped,
        )

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(("date",) + self.names)
        for d, row in zip(self.dates, self.values):
            writer.writerow([d.isoformat()] + [repr(float(x)) for x in row])
        return out.getvalue()


# -- factor formulas ---------------------------------------------------------

def log_returns(prices) -> np.ndarray:
    """``ln(P[t+1] / P[t])``; one element shorter than ``prices``."""
    p = np.asarray(prices, dtype=float)
    if np.any(~(p > 0)):
        raise DomainError("log returns need strictly positive prices")
    return np.diff(np.log(p))


def hml(high, low) -> np.ndarray:
    h = np.asarray(high, dtype=float)
    lo = np.asarray(low, dtype=float)
    if h.shape != lo.shape:
        raise ShapeError(f"high and low lengths differ: {h.shape} vs {lo.shape}")
    return h - lo


def vmom(prices, hml_values) -> np.ndarray:
    """Volatility momentum: 7-day price change over a trailing mean of HML.

    The denominator sums HML over the 23 bars ending at ``t`` and divides by
    22. Elements before index 22 and elements with a zero denominator are NaN.
    """
    p = np.asarray(prices, dtype=float)
    r = np.asarray(hml_values, dtype=float)
    if p.shape != r.shape or p.ndim != 1:
        raise ShapeError(f"prices and HML must be 1-D of equal length: {p.shape} vs {r.shape}")
    n = len(p)
    out = np.full(n, np.nan)
    if n <= VMOM_WINDOW:
        return out
    csum = np.concatenate([[0.0], np.cumsum(r)])
    t = np.arange(VMOM_WINDOW, n)
    denom = (csum[t + 1] - csum[t - VMOM_WINDOW]) / VMOM_WINDOW
    num = p[t] - p[t - VMOM_LAG]
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = num / denom
    vals[denom == 0.0] = np.nan
    out[t] = vals
    return out


def intraday_variance(open_, high, low, close) -> np.ndarray:
    """Squared signed log range: ln(H/L) when O >= C, ln(L/H) otherwise, squared."""
    o, h, lo, c = (np.asarray(x, dtype=float) for x in (open_, high, low, close))
    if not (o.shape == h.shape == lo.shape == c.shape):
        raise ShapeError("open/high/low/close lengths differ")
    if np.any(~(h > 0)) or np.any(~(lo > 0)):
        raise DomainError("high and low must be strictly positive")
    # ln(L/H) is taken as -ln(H/L) so both branches square to the same bits
    psi = np.where(o >= c, 1.0, -1.0) * np.log(h / lo)
    return psi * psi


def asset_features(bars: Sequence[OhlcvBar], prefix: str) -> dict[str, np.ndarray]:
    """All six factors for one asset, each aligned to the bar dates (NaN where undefined)."""
    o = np.array([b.open for b in bars])
    h = np.array([b.high for b in bars])
    lo = np.array([b.low for b in bars])
    c = np.array([b.close for b in bars])
    v = np.array([b.volume for b in bars])
    ret = np.concatenate([[np.nan], log_returns(c)])
    spread = hml(h, lo)
    return {
        f"{prefix}_Close": c,
        f"{prefix}_Return": ret,
        f"{prefix}_Volume": v,
        f"{prefix}_HML": spread,
        f"{prefix}_VMOM": vmom(c, spread),
        f"{prefix}_IV": intraday_variance(o, h, lo, c),
    }


def assemble_panel(panel: AlignedPanel) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Build the explanatory block (left asset, six factors) and the response
    block (right asset: return, volume, IV) on a shared set of rows."""
    left = asset_features(panel.left, panel.left_id)
    right_all = asset_features(panel.right, panel.right_id)
    right = {f"{panel.right_id}_{s}": right_all[f"{panel.right_id}_{s}"] for s in RESPONSE_SUFFIXES}

    x = np.column_stack(list(left.values())) if left else np.empty((len(panel), 0))
    y = np.column_stack(list(right.values()))
    usable = np.all(np.isfinite(x), axis=1) & np.all(np.isfinite(y), axis=1)
    if not usable.any():
        raise InsufficientDataError(
            f"no usable rows out of {len(panel)} after the {VMOM_WINDOW}-bar warmup and undefined factors"
        )
    dates = tuple(d for d, ok in zip(panel.dates, usable) if ok)
    return (
        FeatureMatrix(dates, tuple(left), x[usable]),
        FeatureMatrix(dates, tuple(right), y[usable]),
    )


# -- scaling and pruning -----------------------------------------------------

def standardize(m: FeatureMatrix, fit_window: tuple[date, date]) -> FeatureMatrix:
    """Z-score every column using mean and sample stddev from ``fit_window`` rows only.

    All rows are transformed; the fitted parameters are kept in ``scaler`` so
    later rows can be scaled the same way with :func:`apply_scaler`.
    """
    start, end = fit_window
    mask = np.array([start <= d <= end for d in m.dates], dtype=bool)
    if mask.sum() < 2:
        raise InsufficientDataError(f"fit window [{start}, {end}] holds {int(mask.sum())} rows; need 2")
    fit = m.values[mask]
    mean = fit.mean(axis=0)
    std = fit.std(axis=0, ddof=1)
    for name, s in zip(m.names, std):
        if not s > 0 or not math.isfinite(s):
            raise DegenerateColumnError(name)
    scaler = {name: (float(mu), float(s)) for name, mu, s in zip(m.names, mean, std)}
    return apply_scaler(m, scaler)


def apply_scaler(m: FeatureMatrix, scaler: dict[str, tuple[float, float]]) -> FeatureMatrix:
    missing = [n for n in m.names if n not in scaler]
    if missing:
        raise AlignmentError(f"scaler has no parameters for {missing}")
    mean = np.array([scaler[n][0] for n in m.names])
    std = np.array([scaler[n][1] for n in m.names])
    return FeatureMatrix(m.dates, m.names, (m.values - mean) / std, {n: scaler[n] for n in m.names}, m.dropped)


def prune_correlated(m: FeatureMatrix, threshold: float = DEFAULT_PRUNE_THRESHOLD) -> FeatureMatrix:
    """Drop near-duplicate columns.

    Pairs are scanned in declared column order; whenever ``|r| > threshold``
    the later column goes. The scan restarts until no pair exceeds the threshold.
    """
    current = m
    while current.n_cols > 1:
        r = correlation_matrix(current.values)
        hit = None
        for i in range(current.n_cols):
            for j in range(i + 1, current.n_cols):
                if abs(r[i, j]) > threshold:
                    hit = (i, j)
                    break
            if hit:
                break
        if hit is None:
            break
        i, j = hit
        keep, gone = current.names[i], current.names[j]
        current = current.drop([gone], reason=f"|pearson| = {abs(r[i, j]):.6f} with {keep} > {threshold}")
    return current
