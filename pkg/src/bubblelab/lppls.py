"""LPPLS model evaluation and calibration.

The expected log-price is

    A + (tc - t)^m * (B + C1 cos(omega ln(tc - t)) + C2 sin(omega ln(tc - t)))

The four linear parameters are slaved to (tc, m, omega) by ordinary least
squares; the three nonlinear ones are found by a coarse grid followed by
Nelder-Mead refinement from the best grid points.

Time inside a window is local: row t1 is 0 and row t2 is ``dt - 1``.
``LpplsParams.tc`` uses the same local axis.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial

import numpy as np

from . import _kernels


@dataclass(frozen=True)
class LpplsParams:
    A: float
    B: float
    C1: float
    C2: float
    m: float
    omega: float
    tc: float

    @property
    def C(self) -> float:
        return math.hypot(self.C1, self.C2)


@dataclass(frozen=True)
class FitWindow:
    t1: int
    t2: int

    @property
    def dt(self) -> int:
        return self.t2 - self.t1 + 1


@dataclass(frozen=True)
class FilterConfig:
    """Bounds a calibration must satisfy to count as a qualified bubble fit."""

    b_max: float = 0.0          # B < b_max
    m_min: float = 0.0          # m_min < m < m_max
    m_max: float = 1.0
    omega_min: float = 4.0      # omega_min <= omega <= omega_max
    omega_max: float = 25.0
    tc_min: float = 0.0         # tc_min < tc - t2 < tc_max_frac * dt
    tc_max_frac: float = 1.0
    damping_min: float = 0.5
    oscillations_min: float = 2.5
    cb_ratio_min: float = 0.05  # oscillation filter applies if |C/B| >= this


@dataclass(frozen=True)
class SearchConfig:
    """Grid density and local refinement budget for ``fit_window``.

    The search box is m in (m_lo, m_hi), omega in (omega_lo, omega_hi) and
    tc - t2 in (0, t2 - t1).
    """

    n_m: int = 20
    n_omega: int = 20
    n_tc: int = 20
    m_lo: float = 0.0
    m_hi: float = 1.0
    omega_lo: float = 1.0
    omega_hi: float = 50.0
    n_starts: int = 10
    max_evals: int = 500
    xatol: float = 1e-4
    fatol: float = 1e-12


@dataclass(frozen=True)
class LpplsFit:
    window: FitWindow
    params: LpplsParams | None
    sse: float
    damping: float = float("nan")
    oscillations: float = float("nan")
    qualified: bool = False
    nfev: int = 0

    @property
    def n(self) -> int:
        return self.window.dt

    @property
    def ok(self) -> bool:
        return self.params is not None

    @property
    def tc_minus_t2(self) -> float:
        if self.params is None:
            return float("nan")
        return self.params.tc - (self.window.dt - 1)

    @property
    def tc_index(self) -> float:
        """Critical time on the series row axis."""
        if self.params is None:
            return float("nan")
        return self.window.t1 + self.params.tc


def evaluate(params: LpplsParams, t):
    """Expected log-price at local time ``t`` (scalar or array), ``t < tc``."""
    t = np.asarray(t, dtype=float)
    tau = params.tc - t
    if np.any(tau <= 0):
        raise ValueError("evaluate requires t < tc")
    lt = np.log(tau)
    out = params.A + tau ** params.m * (
        params.B + params.C1 * np.cos(params.omega * lt) + params.C2 * np.sin(params.omega * lt))
    return float(out) if out.ndim == 0 else out


def slave_linear(tc: float, m: float, omega: float, t, y) -> tuple[float, float, float, float, float]:
    """Least-squares (A, B, C1, C2) and the resulting SSE at fixed (tc, m, omega).

    Raises ``np.linalg.LinAlgError`` when the linear system is degenerate.
    """
    t = np.ascontiguousarray(t, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if len(t) < 4:
        raise ValueError("need at least 4 points")
    if not tc > t.max():
        raise ValueError("tc must lie beyond the last time point")
    beta, sse, ok = _kernels.slave(t, y, float(tc), float(m), float(omega))
    if not ok:
        raise np.linalg.LinAlgError("degenerate LPPLS linear system")
    return float(beta[0]), float(beta[1]), float(beta[2]), float(beta[3]), float(sse)


def damping(p: LpplsParams) -> float:
    c = p.C
    if c == 0.0:
        return math.inf
    return p.m * abs(p.B) / (p.omega * c)


def oscillations(p: LpplsParams, dt: int) -> float:
    """Number of log-periodic oscillations between t1 (local 0) and t2."""
    t2 = dt - 1
    if not p.tc > t2:
        return float("nan")
    return p.omega / (2 * math.pi) * math.log(p.tc / (p.tc - t2))


def qualify(fit: LpplsFit, cfg: FilterConfig = FilterConfig()) -> bool:
    p = fit.params
    if p is None:
        return False
    dt = fit.window.dt
    h = p.tc - (dt - 1)
    if not p.B < cfg.b_max:
        return False
    if not cfg.m_min < p.m < cfg.m_max:
        return False
    if not cfg.omega_min <= p.omega <= cfg.omega_max:
        return False
    if not cfg.tc_min < h < cfg.tc_max_frac * dt:
        return False
    if not damping(p) >= cfg.damping_min:
        return False
    ratio = abs(p.C / p.B) if p.B != 0 else math.inf
    if ratio >= cfg.cb_ratio_min and not oscillations(p, dt) >= cfg.oscillations_min:
        return False
    return True


def _interior(lo: float, hi: float, n: int) -> np.ndarray:
    return np.linspace(lo, hi, n + 2)[1:-1]


def fit_window(y, search: SearchConfig = SearchConfig(), flt: FilterConfig = FilterConfig(),
               window: FitWindow | None = None) -> LpplsFit:
    """Calibrate the LPPLS model on one window of log-prices ``y``."""
    y = np.ascontiguousarray(y, dtype=float)
    n = len(y)
    if window is None:
        window = FitWindow(0, n - 1)
    if window.dt != n:
        raise ValueError("window length does not match data")
    if n < 30:
        raise ValueError("fit windows need at least 30 points")
    if np.ptp(y) == 0.0:
        return LpplsFit(window, None, math.inf)
    t = np.arange(n, dtype=float)
    t2 = n - 1.0
    span = n - 1.0
    hs = _interior(0.0, span, search.n_tc)
    ms = _interior(search.m_lo, search.m_hi, search.n_m)
    ws = _interior(search.omega_lo, search.omega_hi, search.n_omega)
    grid = _kernels.grid_costs(t, y, t2 + hs, ms, ws)
    flat = grid.ravel()
    finite = np.flatnonzero(np.isfinite(flat))
    if finite.size == 0:
        return LpplsFit(window, None, math.inf)
    # stable sort keeps ties in grid order, so runs are reproducible
    best = finite[np.argsort(flat[finite], kind="stable")[: search.n_starts]]
    lo = np.array([t2, search.m_lo, search.omega_lo])
    hi = np.array([t2 + span, search.m_hi, search.omega_hi])
    step = 0.5 * np.array([hs[1] - hs[0], ms[1] - ms[0], ws[1] - ws[0]])
    best_x, best_f, nfev = None, math.inf, 0
    for flat_idx in best:
        a, b, c = np.unravel_index(flat_idx, grid.shape)
        x0 = np.array([t2 + hs[a], ms[b], ws[c]])
        x, f, k = _kernels.nelder_mead(t, y, x0, step, lo, hi, search.max_evals,
                                       search.xatol, search.fatol)
        nfev += k
        if f < best_f:
            best_x, best_f = x, f
    if best_x is None:
        return LpplsFit(window, None, math.inf, nfev=nfev)
    tc, m, omega = (float(v) for v in best_x)
    beta, sse, ok = _kernels.slave(t, y, tc, m, omega)
    if not ok:
        return LpplsFit(window, None, math.inf, nfev=nfev)
    params = LpplsParams(float(beta[0]), float(beta[1]), float(beta[2]), float(beta[3]),
                         m, omega, tc)
    fit = LpplsFit(window, params, float(sse), damping(params), oscillations(params, n),
                   False, nfev)
    return replace(fit, qualified=qualify(fit, flt))


def _fit_one(log_prices: np.ndarray, t2: int, search: SearchConfig, flt: FilterConfig,
             t1: int) -> LpplsFit:
    return fit_window(log_prices[t1:t2 + 1], search, flt, FitWindow(t1, t2))


def fit_fan(log_prices, t2: int, t1_range: Iterable[int], search: SearchConfig = SearchConfig(),
            flt: FilterConfig = FilterConfig(), workers: int = 1) -> list[LpplsFit]:
    """One independent fit per start row ``t1`` ending at row ``t2``, in t1 order."""
    log_prices = np.ascontiguousarray(log_prices, dtype=float)
    t1s = list(t1_range)
    if not 0 <= t2 < len(log_prices):
        raise ValueError("t2 outside the series")
    for t1 in t1s:
        if t1 < 0 or t2 - t1 + 1 < 30:
            raise ValueError(f"window [{t1}, {t2}] invalid (needs t1 >= 0 and >= 30 rows)")
    job = partial(_fit_one, log_prices, t2, search, flt)
    if workers > 1 and len(t1s) > 1:
        with ProcessPoolExecutor(workers) as ex:
            return list(ex.map(job, t1s, chunksize=max(1, len(t1s) // (4 * workers))))
    return [job(t1) for t1 in t1s]


def requalify(fits: Sequence[LpplsFit], flt: FilterConfig) -> list[LpplsFit]:
    return [replace(f, qualified=qualify(f, flt)) for f in fits]


def synthetic_log_prices(params: LpplsParams, n: int) -> np.ndarray:
    """Noise-free LPPLS trajectory on local times 0..n-1."""
    return evaluate(params, np.arange(n, dtype=float))
