"""Daily price series: loading, validation, log-returns and rolling volatility.

Time is the row index. One row is one day-step; calendar gaps are allowed
unless ``allow_gaps=False`` is requested at load time.
"""

from __future__ import annotations

import csv
import datetime as _dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class InputError(ValueError):
    """Raised for malformed or invalid user input (bad files, bad dates)."""


@dataclass(frozen=True)
class PriceSeries:
    dates: tuple[_dt.date, ...]
    prices: np.ndarray

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "dates", tuple(self.dates))
        if len(self.dates) != len(prices):
            raise InputError("dates and prices differ in length")
        if len(prices) < 2:
            raise InputError("a price series needs at least 2 rows")
        if not np.all(np.isfinite(prices)) or np.any(prices <= 0):
            raise InputError("non-positive price")
        for a, b in zip(self.dates, self.dates[1:]):
            if not b > a:
                raise InputError(f"dates not strictly increasing at {b.isoformat()}")

    def __len__(self) -> int:
        return len(self.prices)

    @property
    def log_prices(self) -> np.ndarray:
        return np.log(self.prices)

    def index_of(self, date: _dt.date | str) -> int:
        """Row index of ``date``; raises InputError if the date is absent."""
        if isinstance(date, str):
            date = parse_date(date)
        lo, hi = 0, len(self.dates)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.dates[mid] < date:
                lo = mid + 1
            else:
                hi = mid
        if lo == len(self.dates) or self.dates[lo] != date:
            raise InputError(f"date {date.isoformat()} not in series")
        return lo

    def slice(self, start: int, stop: int) -> "PriceSeries":
        return PriceSeries(self.dates[start:stop], self.prices[start:stop])


@dataclass(frozen=True)
class LogReturnSeries:
    """Log-returns; ``returns[i]`` is the step from price row i to row i+1,
    dated at the later row."""

    dates: tuple[_dt.date, ...]
    returns: np.ndarray

    def __len__(self) -> int:
        return len(self.returns)


@dataclass(frozen=True)
class RollingVolatility:
    window_days: int
    values: np.ndarray  # NaN where the trailing window is not yet full

    @property
    def first_defined(self) -> int:
        return self.window_days - 1


def parse_date(text: str) -> _dt.date:
    try:
        return _dt.date.fromisoformat(text.strip())
    except ValueError as exc:
        raise InputError(f"bad ISO-8601 date {text!r}") from exc


def load_prices(path: str | Path, allow_gaps: bool = True) -> PriceSeries:
    """Read a ``date,close`` CSV into a validated PriceSeries.

    Rows may appear in any order; they are sorted by date. Duplicate dates,
    non-positive prices and unparsable rows raise InputError naming the line.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    rows: list[tuple[_dt.date, float, int]] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["date", "close"]:
            raise InputError(f"{path}: expected header 'date,close'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise InputError(f"{path}:{lineno}: malformed row {row!r}")
            try:
                date = _dt.date.fromisoformat(row[0].strip())
                price = float(row[1])
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: malformed row {row!r}") from exc
            if not np.isfinite(price) or price <= 0:
                raise InputError(f"{path}:{lineno}: non-positive price {row[1].strip()}")
            rows.append((date, price, lineno))
    rows.sort(key=lambda r: r[0])
    for a, b in zip(rows, rows[1:]):
        if a[0] == b[0]:
            raise InputError(f"{path}:{b[2]}: duplicate date {b[0].isoformat()}")
    if not allow_gaps:
        for a, b in zip(rows, rows[1:]):
            if (b[0] - a[0]).days != 1:
                raise InputError(f"{path}:{b[2]}: calendar gap before {b[0].isoformat()}")
    return PriceSeries(tuple(r[0] for r in rows), np.array([r[1] for r in rows]))


def write_csv(series: PriceSeries, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", "close"])
        for d, p in zip(series.dates, series.prices):
            writer.writerow([d.isoformat(), repr(float(p))])


def log_returns(p: PriceSeries) -> LogReturnSeries:
    logp = np.log(p.prices)
    return LogReturnSeries(p.dates[1:], logp[1:] - logp[:-1])


def rolling_volatility(r: LogReturnSeries, w: int) -> RollingVolatility:
    """Trailing sample standard deviation (ddof=1) of the last ``w`` returns.

    ``values[i]`` covers returns ``i-w+1 .. i``; the first ``w-1`` entries are NaN.
    """
    if w < 2:
        raise ValueError("volatility window must be >= 2")
    n = len(r.returns)
    if w > n:
        raise ValueError(f"window {w} larger than series of {n} returns")
    values = np.full(n, np.nan)
    windows = np.lib.stride_tricks.sliding_window_view(np.asarray(r.returns, float), w)
    values[w - 1:] = windows.std(axis=1, ddof=1)
    return RollingVolatility(w, values)
