"""Slow, direct reference implementations used to cross-check the fast paths."""

from __future__ import annotations

import itertools

import numpy as np

from .drawdown import Segment


def naive_segment(returns, epsilon) -> list[Segment]:
    """Literal epsilon drawup/drawdown recursion, O(n^2) per phase.

    At every step the cumulative path from the phase start is rebuilt from
    scratch and its extremum searched again; nothing is carried over.
    """
    r = [float(x) for x in returns]
    eps = [float(x) for x in epsilon]
    n = len(r)
    out: list[Segment] = []
    i0 = 0
    up = r[0] >= 0
    while i0 < n:
        end = None
        for i in range(i0, n):
            cums, s = [], 0.0
            for k in range(i0, i + 1):
                s += r[k]
                cums.append(s)
            extreme = max(cums) if up else min(cums)
            delta = extreme - cums[-1] if up else cums[-1] - extreme
            if delta > eps[i]:
                end = i0 + cums.index(extreme)
                break
        kind = "drawup" if up else "drawdown"
        if end is None:
            out.append(Segment(kind, i0, n, open=True))
            break
        out.append(Segment(kind, i0, end + 1))
        i0 = end + 1
        up = not up
    return out


def design_matrix(t, tc, m, omega) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    tau = tc - t
    f = tau ** m
    return np.column_stack([np.ones_like(t), f, f * np.cos(omega * np.log(tau)),
                            f * np.sin(omega * np.log(tau))])


def lstsq_linear(t, y, tc, m, omega) -> np.ndarray:
    """(A, B, C1, C2) by an SVD least-squares solve of the 4-column design."""
    X = design_matrix(t, tc, m, omega)
    return np.linalg.lstsq(X, np.asarray(y, float), rcond=None)[0]


def best_two_partition(points) -> tuple[np.ndarray, float]:
    """Exhaustive minimum-WCSS split into two non-empty groups."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    best, best_w = None, np.inf
    # fix point 0 in group 0 to skip mirror images
    for bits in itertools.product((0, 1), repeat=n - 1):
        labels = np.array((0,) + bits)
        if labels.sum() == 0:
            continue
        w = 0.0
        for g in (0, 1):
            mem = pts[labels == g]
            w += float(((mem - mem.mean(axis=0)) ** 2).sum())
        if w < best_w:
            best, best_w = labels, w
    return best, best_w
