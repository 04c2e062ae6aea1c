"""Synthetic price paths with known ground truth, for tests and experiments."""

from __future__ import annotations

import datetime as _dt
import math

import numpy as np

from .lppls import LpplsParams, synthetic_log_prices
from .timeseries import PriceSeries


def daily_series(log_prices, start: str = "2012-01-01") -> PriceSeries:
    d0 = _dt.date.fromisoformat(start)
    dates = tuple(d0 + _dt.timedelta(days=i) for i in range(len(log_prices)))
    return PriceSeries(dates, np.exp(np.asarray(log_prices, dtype=float)))


def random_bubble_params(rng, n: int, h: float, rise: float = 1.0, cb_scale: float = 0.5,
                         m_range=(0.3, 0.7), omega_range=(6.0, 12.0), A: float = 0.0) -> LpplsParams:
    """LPPLS parameters for a window of ``n`` rows ending ``h`` rows before tc.

    ``rise`` is the log-price gain over the window; the oscillation amplitude
    is ``cb_scale * m / omega`` of |B|, which keeps the damping ratio at
    ``1 / cb_scale``.
    """
    m = rng.uniform(*m_range)
    omega = rng.uniform(*omega_range)
    tc = n - 1 + h
    B = -rise / (tc ** m - h ** m)
    c = cb_scale * m / omega * abs(B)
    phase = rng.uniform(0, 2 * math.pi)
    return LpplsParams(A, B, c * math.cos(phase), c * math.sin(phase), m, omega, tc)


def gbm_log_prices(rng, n: int, sigma: float = 0.02, drift: float = 0.0, start: float = 0.0):
    return start + np.concatenate([[0.0], np.cumsum(rng.normal(drift - 0.5 * sigma ** 2, sigma, n - 1))])


def planted_start(rng, prefix: int = 300, length: int = 100, h: float = 10.0, rise: float = 3.0,
                  sigma: float = 0.01, level: float = 3.0):
    """Flat white-noise prefix followed by an LPPLS bubble starting at row ``prefix``.

    Returns ``(log_prices, params)``; params are on the bubble's local time axis.
    """
    p = random_bubble_params(rng, length, h, rise)
    bubble = synthetic_log_prices(p, length)
    bubble -= bubble[0]
    y = np.concatenate([np.zeros(prefix), bubble]) + rng.normal(0, sigma, prefix + length)
    return y + level, p


def planted_catalog_series(rng, n: int = 200, start: int = 60, peak: int = 150, crash: float = 0.8,
                           crash_days: int = 8, sigma: float = 0.004, level: float = 3.0):
    """Quiet random walk, one LPPLS run-up from ``start`` to ``peak``, then a crash.

    Returns log-prices of length ``n``.
    """
    run = peak - start + 1
    p = random_bubble_params(rng, run, 8.0, rise=1.2, cb_scale=0.3)
    bubble = synthetic_log_prices(p, run)
    bubble -= bubble[0]
    y = np.zeros(n)
    y[start:peak + 1] = bubble
    drop = bubble[-1] - crash * np.linspace(0, 1, crash_days + 1)[1:]
    y[peak + 1:peak + 1 + crash_days] = drop
    y[peak + 1 + crash_days:] = drop[-1]
    noise = np.cumsum(rng.normal(0, sigma, n))
    return y + noise + level


def recovery_case(rng, noisy: bool, sigma: float = 0.01):
    """One LPPLS window with parameters drawn inside the qualification box.

    Window length 150-300 rows, tc 5-30 rows past the last row, m in
    [0.2, 0.8], omega in [5, 15] and a log rise of 1 over the window.
    Returns ``(log_prices, params)``.
    """
    n = int(rng.integers(150, 301))
    h = rng.uniform(5, 30)
    p = random_bubble_params(rng, n, h, rise=1.0, cb_scale=rng.uniform(0, 1.6),
                             m_range=(0.2, 0.8), omega_range=(5.0, 15.0), A=5.0)
    y = synthetic_log_prices(p, n)
    if noisy:
        y = y + rng.normal(0, sigma, n)
    return y, p
