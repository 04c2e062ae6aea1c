"""Fast internal consistency checks behind ``bubblelab selftest``."""

from __future__ import annotations

import numpy as np

from .clustering import kmeans, optimal_k, silhouette
from .drawdown import segment
from .lppls import slave_linear
from .oracles import lstsq_linear, naive_segment


def _check_segmentation(rng) -> bool:
    for _ in range(20):
        r = rng.normal(0, 0.02, int(rng.integers(2, 80)))
        eps = np.full(len(r), rng.uniform(0.005, 0.08))
        if segment(r, eps) != naive_segment(r, eps):
            return False
    return True


def _check_slaving(rng) -> bool:
    for _ in range(20):
        n = int(rng.integers(30, 200))
        t = np.arange(n, dtype=float)
        tc, m, w = n - 1 + rng.uniform(1, n), rng.uniform(0.1, 0.9), rng.uniform(2, 20)
        y = rng.normal(0, 0.05, n).cumsum()
        ours = np.array(slave_linear(tc, m, w, t, y)[:4])
        ref = lstsq_linear(t, y, tc, m, w)
        if np.linalg.norm(ours - ref) > 1e-8 * max(1.0, np.linalg.norm(ref)):
            return False
    return True


def _check_clustering(rng) -> bool:
    pts = np.vstack([rng.normal((50, 10), 0.1, (20, 2)), rng.normal((300, 200), 0.1, (20, 2))])
    k, res = optimal_k(pts, seed=0)
    four = np.array([[0, 0], [0, 1], [10, 0], [10, 1]], float)
    s, _ = silhouette(np.array([0, 0, 1, 1]), four)
    b = (10 + np.sqrt(101)) / 2
    return k == 2 and res.silhouette > 0.8 and np.allclose(s, (b - 1) / b, atol=1e-12)


def run_selftest(verbose: bool = True) -> bool:
    rng = np.random.default_rng(20180228)
    checks = {"segmentation vs naive recursion": _check_segmentation,
              "linear slaving vs lstsq": _check_slaving,
              "k-means / silhouette": _check_clustering}
    ok = True
    for name, fn in checks.items():
        passed = fn(rng)
        ok &= passed
        if verbose:
            print(f"{'PASS' if passed else 'FAIL'}  {name}")
    return ok
