"""Epsilon drawup/drawdown segmentation, the (eps0, w) peak-vote grid and
bubble framing.

Segment indices are price-row indices. Consecutive segments share their
boundary row (the extremum that ended the previous phase), so the return
steps between rows are tiled exactly once.
"""

from __future__ import annotations

import datetime as _dt
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .timeseries import LogReturnSeries, PriceSeries, log_returns, rolling_volatility

Kind = Literal["drawup", "drawdown"]


@dataclass(frozen=True)
class EpsilonConfig:
    eps0: float
    w: int

    def __post_init__(self):
        if not self.eps0 > 0:
            raise ValueError("eps0 must be > 0")
        if self.w < 2:
            raise ValueError("w must be >= 2")


@dataclass(frozen=True)
class GridConfig:
    """The (eps0, w) grid. Defaults give 50 x 11 = 550 pairs."""

    eps0_min: float = 0.1
    eps0_max: float = 5.0
    eps0_step: float = 0.1
    w_min: int = 10
    w_max: int = 60
    w_step: int = 5

    def eps0_values(self) -> list[float]:
        n = int(round((self.eps0_max - self.eps0_min) / self.eps0_step)) + 1
        return [round(self.eps0_min + k * self.eps0_step, 10) for k in range(n)]

    def w_values(self) -> list[int]:
        return list(range(self.w_min, self.w_max + 1, self.w_step))

    def pairs(self) -> list[EpsilonConfig]:
        return [EpsilonConfig(e, w) for e in self.eps0_values() for w in self.w_values()]


@dataclass(frozen=True)
class Segment:
    kind: Kind
    start_index: int
    end_index: int
    # True when the series ended before the stopping rule fired
    open: bool = False


@dataclass(frozen=True)
class PeakFractionSeries:
    dates: tuple[_dt.date, ...]
    votes: np.ndarray  # integer vote counts per price row
    n_pairs: int

    @property
    def values(self) -> np.ndarray:
        return self.votes / self.n_pairs


@dataclass(frozen=True)
class BubbleRecord:
    start: _dt.date
    peak: _dt.date
    crash_end: _dt.date | None
    start_index: int
    peak_index: int
    crash_end_index: int | None
    price_peak: float
    price_crash_end: float | None
    size_pct: float
    crash_size_pct: float | None
    duration_days: int
    bubble_class: Literal["long", "short"] = "long"
    qualified: bool = True

    @property
    def crash_observed(self) -> bool:
        return self.crash_end_index is not None


def segment(r: LogReturnSeries | np.ndarray, epsilon: np.ndarray) -> list[Segment]:
    """Split a return series into alternating drawups and drawdowns.

    ``epsilon[i]`` is the stopping tolerance tested at return step ``i``.
    A phase stops at the first step where the deviation from its running
    extremum strictly exceeds the tolerance; it then ends at that extremum
    (first occurrence on ties) and the next phase starts right after it.
    """
    returns = np.asarray(getattr(r, "returns", r), dtype=float).tolist()
    eps = np.asarray(epsilon, dtype=float).tolist()
    n = len(returns)
    if n == 0:
        raise ValueError("empty return series")
    if len(eps) != n:
        raise ValueError("epsilon must have one value per return")

    segments: list[Segment] = []
    up = returns[0] >= 0
    i0 = 0
    while i0 < n:
        cum = 0.0
        best = -np.inf if up else np.inf
        best_k = i0
        stopped = False
        for i in range(i0, n):
            cum += returns[i]
            if up:
                if cum > best:
                    best, best_k = cum, i
                if best - cum > eps[i]:
                    stopped = True
                    break
            else:
                if cum < best:
                    best, best_k = cum, i
                if cum - best > eps[i]:
                    stopped = True
                    break
        kind: Kind = "drawup" if up else "drawdown"
        if not stopped:
            segments.append(Segment(kind, i0, n, open=True))
            break
        segments.append(Segment(kind, i0, best_k + 1))
        i0 = best_k + 1
        up = not up
    return segments


def epsilon_series(vol: np.ndarray, eps0: float, backfill: bool = True) -> np.ndarray:
    """Elementwise tolerance ``eps0 * sigma``.

    With ``backfill`` the undefined head of the volatility series takes the
    first defined value, so segmentation can start at row 0.
    """
    if not eps0 > 0:
        raise ValueError("eps0 must be > 0")
    sigma = np.asarray(getattr(vol, "values", vol), dtype=float)
    if backfill:
        defined = np.flatnonzero(~np.isnan(sigma))
        if defined.size == 0:
            raise ValueError("volatility series has no defined value")
        sigma = sigma.copy()
        sigma[: defined[0]] = sigma[defined[0]]
    return eps0 * sigma


def peak_indices(segments: Sequence[Segment], count_open: bool = False) -> list[int]:
    """Price rows that end a drawup. Open final drawups vote only if ``count_open``."""
    return [s.end_index for s in segments
            if s.kind == "drawup" and (count_open or not s.open)]


def grid_scan(p: PriceSeries, grid: GridConfig = GridConfig(),
              count_open: bool = False) -> PeakFractionSeries:
    """Run the segmentation for every (eps0, w) pair and count peak votes."""
    r = log_returns(p)
    if len(r) < grid.w_max:
        raise ValueError(f"series too short for volatility window {grid.w_max}")
    votes = np.zeros(len(p), dtype=np.int64)
    n_pairs = 0
    for w in grid.w_values():
        vol = rolling_volatility(r, w)
        for eps0 in grid.eps0_values():
            segs = segment(r, epsilon_series(vol, eps0))
            for k in peak_indices(segs, count_open):
                votes[k] += 1
            n_pairs += 1
    return PeakFractionSeries(p.dates, votes, n_pairs)


def classify_peaks(f: PeakFractionSeries | np.ndarray, long_lo: float = 0.95,
                   short_lo: float = 0.65) -> tuple[list[int], list[int]]:
    """Split rows into long peaks (f >= long_lo) and short peaks
    (short_lo <= f < long_lo). Returns row indices in chronological order."""
    if not (0 < short_lo < long_lo <= 1):
        raise ValueError("need 0 < short_lo < long_lo <= 1")
    if isinstance(f, PeakFractionSeries):
        # integer comparison avoids rounding at the threshold
        votes = f.votes
        long_mask = votes >= long_lo * f.n_pairs - 1e-9
        short_mask = (votes >= short_lo * f.n_pairs - 1e-9) & ~long_mask
    else:
        vals = np.asarray(f, dtype=float)
        long_mask = (vals >= long_lo) & (vals <= 1)
        short_mask = (vals >= short_lo) & (vals < long_lo)
    return np.flatnonzero(long_mask).tolist(), np.flatnonzero(short_mask).tolist()


def frame_bubbles(p: PriceSeries, peaks: Sequence[int], starts: Sequence[int],
                  bubble_class: Literal["long", "short"] = "long") -> list[BubbleRecord]:
    """Attach crash ends, sizes and durations to (start, peak) pairs.

    The crash of bubble i ends at the price minimum over
    ``(peak_i, start_{i+1}]`` (or to the end of data for the last bubble).
    A peak on the final row has no observable crash.
    """
    if len(peaks) != len(starts):
        raise ValueError("peaks and starts differ in length")
    prices = p.prices
    n = len(prices)
    records = []
    for i, (s, k) in enumerate(zip(starts, peaks)):
        if not s < k:
            raise ValueError(f"bubble start {s} not before peak {k}")
        if i > 0:
            if not k > peaks[i - 1]:
                raise ValueError("peaks must be strictly increasing")
            if s < peaks[i - 1]:
                raise ValueError(f"overlapping frames: start {s} before previous peak {peaks[i - 1]}")
        stop = starts[i + 1] if i + 1 < len(peaks) else n - 1
        if stop > k:
            window = prices[k + 1: stop + 1]
            ce = k + 1 + int(np.argmin(window))
            crash = 100.0 * (prices[ce] / prices[k] - 1.0)
            ce_date, ce_price = p.dates[ce], float(prices[ce])
        else:
            ce = crash = ce_date = ce_price = None
        records.append(BubbleRecord(
            start=p.dates[s], peak=p.dates[k], crash_end=ce_date,
            start_index=s, peak_index=k, crash_end_index=ce,
            price_peak=float(prices[k]), price_crash_end=ce_price,
            size_pct=100.0 * (prices[k] / prices[s] - 1.0),
            crash_size_pct=crash, duration_days=k - s,
            bubble_class=bubble_class,
        ))
    return records


def qualify_short(b: BubbleRecord, min_days: int = 30, min_size_pct: float = 25.0) -> bool:
    return b.duration_days >= min_days and b.size_pct >= min_size_pct
