"""Bubble start selection by Lagrange regularisation of the fit cost.

For a fan of fits sharing the end row t2, the normalised cost
``chi2(t1) = SSE / dt`` is detrended by its OLS slope against the window
size ``t2 - t1``; the start t1* minimises the detrended cost.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .lppls import LpplsFit


@dataclass(frozen=True)
class LagrangeFit:
    t2: int
    t1: np.ndarray          # admissible start rows with a finite cost
    chi2: np.ndarray
    lam: float
    t1_star: int

    @property
    def chi2_lambda(self) -> np.ndarray:
        return self.chi2 - self.lam * (self.t2 - self.t1)


def costs_from_fan(fits: Sequence[LpplsFit]) -> tuple[np.ndarray, np.ndarray, int]:
    """(t1, chi2, t2) for the successful fits of a fan. Failed fits carry no cost."""
    if not fits:
        raise ValueError("empty fan")
    t2 = fits[0].window.t2
    if any(f.window.t2 != t2 for f in fits):
        raise ValueError("fan mixes different t2")
    good = [f for f in fits if f.ok and np.isfinite(f.sse)]
    t1 = np.array([f.window.t1 for f in good], dtype=np.int64)
    chi2 = np.array([f.sse / f.window.dt for f in good], dtype=float)
    return t1, chi2, t2


def estimate_lambda(sizes, chi2) -> float:
    """OLS slope of ``chi2`` regressed on window size ``sizes`` (= t2 - t1)."""
    x = np.asarray(sizes, dtype=float)
    y = np.asarray(chi2, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("need at least two (size, cost) pairs")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise ValueError("all window sizes are equal; slope undefined")
    return float(xc @ (y - y.mean())) / sxx


def select_t1_star(t1, chi2, t2: int, lam: float, earliest_allowed: int | None = None) -> int:
    """Argmin of the regularised cost over ``t1 >= earliest_allowed``.

    Ties go to the larger (later) t1.
    """
    t1 = np.asarray(t1, dtype=np.int64)
    chi2 = np.asarray(chi2, dtype=float)
    if t1.size == 0:
        raise ValueError("empty fan")
    mask = np.ones(t1.size, bool) if earliest_allowed is None else t1 >= earliest_allowed
    if not mask.any():
        raise ValueError(f"no admissible t1 >= {earliest_allowed}")
    reg = chi2[mask] - lam * (t2 - t1[mask])
    cand = t1[mask]
    best = reg.min()
    return int(cand[reg == best].max())


def lagrange_start(fits: Sequence[LpplsFit], earliest_allowed: int | None = None) -> LagrangeFit:
    """Estimate lambda on the whole fan, then pick t1* subject to the floor."""
    t1, chi2, t2 = costs_from_fan(fits)
    if t1.size == 0:
        raise ValueError("no successful fits in fan")
    lam = estimate_lambda(t2 - t1, chi2)
    star = select_t1_star(t1, chi2, t2, lam, earliest_allowed)
    return LagrangeFit(t2, t1, chi2, lam, star)


def stability_report(log_prices, t2_values: Sequence[int], fan_fn, earliest_allowed=None) -> dict[int, int]:
    """t1* for each t2 in ``t2_values``; ``fan_fn(t2)`` must return that fan."""
    return {int(t2): lagrange_start(fan_fn(t2), earliest_allowed).t1_star for t2 in t2_values}
