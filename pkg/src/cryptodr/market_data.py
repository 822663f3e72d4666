"""OHLCV ingestion: Yahoo-layout CSV parsing, validation and two-asset alignment."""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, replace
from datetime import date
from typing import Iterable

from .errors import DataError, DuplicateDateError, EmptyPanelError, FormatError, RowError

log = logging.getLogger(__name__)

HEADER = ("Date", "Open", "High", "Low", "Close", "Adj Close", "Volume")
_MISSING = {"", "null"}


@dataclass(frozen=True)
class OhlcvBar:
    date: date
    open: float
    high: float
    low: float
    close: float
    volume: float


@dataclass(frozen=True)
class OhlcvSeries:
    asset_id: str
    bars: tuple[OhlcvBar, ...]
    skipped: int = 0

    def __post_init__(self):
        for prev, cur in zip(self.bars, self.bars[1:]):
            if cur.date <= prev.date:
                raise DataError(f"{self.asset_id}: dates not strictly increasing at {cur.date}")

    def __len__(self) -> int:
        return len(self.bars)

    @property
    def dates(self) -> list[date]:
        return [b.date for b in self.bars]


@dataclass(frozen=True)
class AlignedPanel:
    dates: tuple[date, ...]
    left: tuple[OhlcvBar, ...]
    right: tuple[OhlcvBar, ...]
    left_id: str = "BTC"
    right_id: str = "ETH"
    dropped: int = 0

    def __post_init__(self):
        if not (len(self.dates) == len(self.left) == len(self.right)):
            raise ValueError("panel sides have different lengths")
        for d, a, b in zip(self.dates, self.left, self.right):
            if a.date != d or b.date != d:
                raise ValueError(f"panel bar date mismatch at {d}")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur <= prev:
                raise ValueError(f"panel dates not strictly increasing at {cur}")

    def __len__(self) -> int:
        return len(self.dates)


@dataclass
class BarWarning:
    """One validation finding; ``repaired`` is set when the bar was modified."""

    asset_id: str
    date: date
    kind: str
    message: str
    repaired: bool = False


def parse_ohlcv_csv(data: bytes | str, asset_id: str) -> OhlcvSeries:
    """Parse a Yahoo Finance daily CSV.

    Rows whose numeric fields are empty or the literal ``null`` are skipped
    and counted in ``OhlcvSeries.skipped``. ``Adj Close`` is read and discarded.
    """
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError(f"{asset_id}: empty file, expected header {','.join(HEADER)}") from None
    if tuple(h.strip().lstrip("﻿") for h in header) != HEADER:
        raise FormatError(f"{asset_id}: header {header!r} does not match {','.join(HEADER)}")

    rows: list[tuple[int, OhlcvBar]] = []
    skipped = 0
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(HEADER):
            raise RowError(lineno, f"expected {len(HEADER)} fields, got {len(row)}")
        cells = [c.strip() for c in row]
        if any(c in _MISSING for c in cells[1:]):
            skipped += 1
            continue
        try:
            d = date.fromisoformat(cells[0])
        except ValueError:
            raise RowError(lineno, f"unparseable date {cells[0]!r}") from None
        try:
            o, h, lo, c, _adj, v = (float(x) for x in cells[1:])
        except ValueError as exc:
            raise RowError(lineno, f"unparseable number ({exc})") from None
        rows.append((lineno, OhlcvBar(d, o, h, lo, c, v)))

    rows.sort(key=lambda item: item[1].date)
    for (_, prev), (lineno, cur) in zip(rows, rows[1:]):
        if cur.date == prev.date:
            raise DuplicateDateError(lineno, cur.date)
    if skipped:
        log.info("%s: skipped %d rows with missing values", asset_id, skipped)
    return OhlcvSeries(asset_id, tuple(bar for _, bar in rows), skipped)


def serialize_ohlcv_csv(series: OhlcvSeries) -> str:
    """Write ``series`` back out in the Yahoo layout (Adj Close = Close)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(HEADER)
    for b in series.bars:
        writer.writerow(
            [b.date.isoformat(), repr(b.open), repr(b.high), repr(b.low), repr(b.close), repr(b.close), repr(b.volume)]
        )
    return out.getvalue()


def validate_series(series: OhlcvSeries) -> tuple[OhlcvSeries, list[BarWarning]]:
    """Check bar sanity without aborting.

    Bars with ``high < low`` are repaired by swapping the two fields. Returns
    the (possibly repaired) series together with the warnings.
    """
    warnings: list[BarWarning] = []
    bars = []
    for b in series.bars:
        if b.high < b.low:
            warnings.append(
                BarWarning(series.asset_id, b.date, "high_below_low",
                         f"high {b.high} < low {b.low}; swapped", repaired=True)
            )
            b = replace(b, high=b.low, low=b.high)
        if min(b.open, b.high, b.low, b.close) <= 0:
            warnings.append(BarWarning(series.asset_id, b.date, "non_positive_price", "price <= 0"))
        if b.volume == 0:
            warnings.append(BarWarning(series.asset_id, b.date, "zero_volume", "volume is 0"))
        bars.append(b)
    return OhlcvSeries(series.asset_id, tuple(bars), series.skipped), warnings


def align(a: OhlcvSeries, b: OhlcvSeries, start: date, end: date) -> AlignedPanel:
    """Inner-join two series on date within the inclusive window ``[start, end]``."""
    if start > end:
        raise ValueError(f"window start {start} is after end {end}")
    left = {bar.date: bar for bar in a.bars if start <= bar.date <= end}
    right = {bar.date: bar for bar in b.bars if start <= bar.date <= end}
    common = sorted(left.keys() & right.keys())
    if not common:
        raise EmptyPanelError(f"{a.asset_id} and {b.asset_id} share no dates in [{start}, {end}]")
    dropped = len(left) + len(right) - 2 * len(common)
    if dropped:
        log.info("align: dropped %d dates present in only one series", dropped)
    return AlignedPanel(
        dates=tuple(common),
        left=tuple(left[d] for d in common),
        right=tuple(right[d] for d in common),
        left_id=a.asset_id,
        right_id=b.asset_id,
        dropped=dropped,
    )


def series_from_bars(asset_id: str, bars: Iterable[OhlcvBar]) -> OhlcvSeries:
    return OhlcvSeries(asset_id, tuple(sorted(bars, key=lambda b: b.date)))
