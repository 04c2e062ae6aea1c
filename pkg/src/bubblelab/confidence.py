"""Multiscale LPPLS confidence indicators.

At an analysis row t2, a band's indicator is the fraction of window sizes
``dt`` in the band whose fit ending at t2 qualifies.
"""

from __future__ import annotations

import datetime as _dt
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .lppls import FilterConfig, LpplsFit, SearchConfig, fit_fan, requalify


@dataclass(frozen=True)
class ScaleBand:
    name: str
    dt_min: int
    dt_max: int

    @property
    def n_windows(self) -> int:
        return self.dt_max - self.dt_min + 1


SHORT = ScaleBand("short", 30, 120)
MEDIUM = ScaleBand("medium", 100, 240)
LONG = ScaleBand("long", 200, 720)
DEFAULT_BANDS = (SHORT, MEDIUM, LONG)
BANDS_BY_NAME = {b.name: b for b in DEFAULT_BANDS}


@dataclass(frozen=True)
class ConfidencePoint:
    t2: int
    band: str
    qualified: int
    attempted: int
    partial: bool

    @property
    def value(self) -> float:
        return self.qualified / self.attempted if self.attempted else 0.0


@dataclass(frozen=True)
class ConfidenceSeries:
    bands: tuple[str, ...]
    t2: np.ndarray
    values: dict[str, np.ndarray]
    partial: dict[str, np.ndarray]
    dates: tuple[_dt.date, ...] | None = None


def band_fits(log_prices, t2: int, band: ScaleBand, search: SearchConfig = SearchConfig(),
              flt: FilterConfig = FilterConfig(), workers: int = 1) -> tuple[list[LpplsFit], bool]:
    """Fits for every window size of ``band`` that fits in the data before t2.

    Returns ``(fits, partial)``; ``partial`` is True when the band had to be
    truncated at the start of the series.
    """
    dt_hi = min(band.dt_max, t2 + 1)
    partial = dt_hi < band.dt_max
    if dt_hi < band.dt_min:
        return [], True
    t1s = [t2 - dt + 1 for dt in range(band.dt_max, band.dt_min - 1, -1) if dt <= dt_hi]
    return fit_fan(log_prices, t2, t1s, search, flt, workers), partial


def confidence_at(log_prices, t2: int, band: ScaleBand, flt: FilterConfig = FilterConfig(),
                  search: SearchConfig = SearchConfig(), workers: int = 1) -> ConfidencePoint:
    fits, partial = band_fits(log_prices, t2, band, search, flt, workers)
    return ConfidencePoint(t2, band.name, sum(f.qualified for f in fits), len(fits), partial)


def confidence_from_fits(fits: Sequence[LpplsFit], t2: int, band: ScaleBand,
                         flt: FilterConfig) -> ConfidencePoint:
    """Indicator for ``band`` using precomputed fits ending at t2 (any superset of sizes)."""
    inside = [f for f in fits if f.window.t2 == t2 and band.dt_min <= f.window.dt <= band.dt_max]
    inside = requalify(inside, flt)
    partial = t2 + 1 < band.dt_max
    return ConfidencePoint(t2, band.name, sum(f.qualified for f in inside), len(inside), partial)


def confidence_series(log_prices, t2_range: Sequence[int], bands: Sequence[ScaleBand] = DEFAULT_BANDS,
                      stride: int = 5, flt: FilterConfig = FilterConfig(),
                      search: SearchConfig = SearchConfig(), workers: int = 1,
                      dates=None) -> ConfidenceSeries:
    """Indicators for every ``stride``-th row of ``t2_range`` and each band.

    Overlapping bands share fits: each (t2, dt) window is calibrated once.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    t2s = list(t2_range)[::stride]
    values = {b.name: np.zeros(len(t2s)) for b in bands}
    partial = {b.name: np.zeros(len(t2s), dtype=bool) for b in bands}
    for j, t2 in enumerate(t2s):
        # only calibrate sizes some band actually needs
        wanted = sorted({dt for b in bands for dt in range(b.dt_min, b.dt_max + 1) if dt <= t2 + 1})
        fits = fit_fan(log_prices, t2, [t2 - dt + 1 for dt in reversed(wanted)], search, flt,
                       workers) if wanted else []
        for b in bands:
            pt = confidence_from_fits(fits, t2, b, flt)
            values[b.name][j] = pt.value
            partial[b.name][j] = pt.partial
    sel_dates = tuple(dates[t] for t in t2s) if dates is not None else None
    return ConfidenceSeries(tuple(b.name for b in bands), np.array(t2s), values, partial, sel_dates)
