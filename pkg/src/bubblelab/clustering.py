"""k-means scenario clustering of qualified fits in (dt, tc - t2) space,
with the cluster count chosen by the mean silhouette score."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .lppls import LpplsFit


@dataclass(frozen=True)
class ClusterResult:
    k: int
    centroids: np.ndarray        # (k, 2)
    labels: np.ndarray           # (n,)
    wcss: float
    silhouette: float = float("nan")
    # set when optimal_k could not cluster (too few distinct points)
    fallback: bool = False

    @property
    def counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)


@dataclass(frozen=True)
class Scenario:
    horizon_mean: float
    horizon_std: float
    dt_mean: float
    dt_std: float
    n: int
    probability: float
    low_support: bool


def fit_points(fits: Sequence[LpplsFit], qualified_only: bool = True) -> np.ndarray:
    """(dt, tc - t2) for each fit, as an (n, 2) array."""
    rows = [(f.window.dt, f.tc_minus_t2) for f in fits if f.ok and (f.qualified or not qualified_only)]
    return np.array(rows, dtype=float).reshape(-1, 2)


def _wcss(points, labels, centroids) -> float:
    d = points - centroids[labels]
    return float(np.einsum("ij,ij->", d, d))


def _sq_dists(points, centroids):
    return ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


def _plus_plus(points, k, rng) -> np.ndarray:
    n = len(points)
    centers = [points[rng.integers(n)]]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            raise ValueError("fewer distinct points than clusters")
        idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
        idx = min(idx, n - 1)
        centers.append(points[idx])
        d2 = np.minimum(d2, ((points - points[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def _lloyd(points, centroids, max_iter):
    labels = np.full(len(points), -1)
    history = []
    for _ in range(max_iter):
        new = np.argmin(_sq_dists(points, centroids), axis=1)
        for j in range(len(centroids)):
            if not np.any(new == j):
                # reseed an empty cluster at the point farthest from its centroid
                far = int(np.argmax(((points - centroids[new]) ** 2).sum(axis=1)))
                new[far] = j
        centroids = np.array([points[new == j].mean(axis=0) for j in range(len(centroids))])
        history.append(_wcss(points, new, centroids))
        if np.array_equal(new, labels):
            break
        labels = new
    return labels, centroids, history


def _hartigan(points, labels, k):
    """Single-point moves that lower WCSS once centroid shifts are counted.

    Run after Lloyd: it escapes some Lloyd fixed points and every partition
    it returns is still one.
    """
    labels = labels.copy()
    sizes = np.bincount(labels, minlength=k).astype(float)
    cent = np.array([points[labels == j].mean(axis=0) for j in range(k)])
    moved = True
    while moved:
        moved = False
        for i in range(len(points)):
            a = labels[i]
            if sizes[a] <= 1:
                continue
            d = ((cent - points[i]) ** 2).sum(axis=1)
            cost_in = sizes / (sizes + 1) * d
            cost_in[a] = np.inf
            b = int(np.argmin(cost_in))
            if cost_in[b] < sizes[a] / (sizes[a] - 1) * d[a] * (1 - 1e-12):
                cent[a] = (cent[a] * sizes[a] - points[i]) / (sizes[a] - 1)
                cent[b] = (cent[b] * sizes[b] + points[i]) / (sizes[b] + 1)
                sizes[a] -= 1
                sizes[b] += 1
                labels[i] = b
                moved = True
    cent = np.array([points[labels == j].mean(axis=0) for j in range(k)])
    return labels, cent


def _canonical(points):
    order = np.lexsort((points[:, 1], points[:, 0]))
    return order


def kmeans(points, k: int, seed: int = 0, n_restarts: int = 20, max_iter: int = 300,
           standardize: bool = False) -> ClusterResult:
    """Lloyd's algorithm with k-means++ seeding and a Hartigan polish;
    best of ``n_restarts`` by WCSS.

    Points are put in lexicographic order before seeding, so the result does
    not depend on the input order.
    """
    points = np.asarray(points, dtype=float)
    if k < 1:
        raise ValueError("k must be >= 1")
    n_distinct = len(np.unique(points, axis=0))
    if n_distinct < k:
        raise ValueError(f"fewer distinct points ({n_distinct}) than k={k}")
    order = _canonical(points)
    work = points[order]
    if standardize:
        sd = work.std(axis=0)
        work = (work - work.mean(axis=0)) / np.where(sd > 0, sd, 1.0)
    best = None
    for r in range(n_restarts):
        rng = np.random.default_rng([seed, r])
        labels, centroids, _ = _lloyd(work, _plus_plus(work, k, rng), max_iter)
        labels, centroids = _hartigan(work, labels, k)
        w = _wcss(work, labels, centroids)
        if best is None or w < best[0]:
            best = (w, labels, centroids)
    w, labels, centroids = best
    # relabel clusters by first appearance in canonical order
    _, first = np.unique(labels, return_index=True)
    remap = np.empty(k, dtype=np.int64)
    remap[np.argsort(first)] = np.arange(k)
    labels = remap[labels]
    out = np.empty(len(points), dtype=np.int64)
    out[order] = labels
    centroids = np.array([points[out == j].mean(axis=0) for j in range(k)])
    return ClusterResult(k, centroids, out, _wcss(points, out, centroids))


def silhouette(labels, points) -> tuple[np.ndarray, float]:
    """Per-point silhouette values and their mean. Singleton clusters score 0."""
    points = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    ks = np.unique(labels)
    if len(ks) < 2:
        raise ValueError("silhouette needs at least two clusters")
    dist = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2))
    s = np.zeros(len(points))
    sizes = {k: int(np.sum(labels == k)) for k in ks}
    means = np.stack([dist[:, labels == k].mean(axis=1) for k in ks], axis=1)
    for i in range(len(points)):
        own = int(np.searchsorted(ks, labels[i]))
        size = sizes[labels[i]]
        if size == 1:
            continue
        a = means[i, own] * size / (size - 1)
        b = np.min(np.delete(means[i], own))
        denom = max(a, b)
        s[i] = 0.0 if denom == 0 else (b - a) / denom
    return s, float(s.mean())


def optimal_k(points, k_range: Sequence[int] = range(2, 11), seed: int = 0,
              n_restarts: int = 20, standardize: bool = False) -> tuple[int, ClusterResult]:
    """The k with the highest mean silhouette (ties to the smaller k)."""
    points = np.asarray(points, dtype=float)
    if len(points) == 0:
        raise ValueError("no points to cluster")
    best = None
    for k in k_range:
        if k < 2 or k > len(points):
            continue
        try:
            res = kmeans(points, k, seed, n_restarts, standardize=standardize)
        except ValueError:
            continue
        _, s = silhouette(res.labels, points)
        if best is None or s > best.silhouette:
            best = ClusterResult(res.k, res.centroids, res.labels, res.wcss, s)
    if best is None:
        labels = np.zeros(len(points), dtype=np.int64)
        c = points.mean(axis=0, keepdims=True)
        best = ClusterResult(1, c, labels, _wcss(points, labels, c), float("nan"), fallback=True)
    return best.k, best


def scenario_report(result: ClusterResult, points, min_support: int = 5) -> list[Scenario]:
    """Scenarios ordered by probability (largest cluster first).

    Clusters with ``min_support`` members or fewer are flagged low-support.
    """
    points = np.asarray(points, dtype=float)
    total = len(points)
    out = []
    for j in range(result.k):
        mem = points[result.labels == j]
        if len(mem) == 0:
            continue
        out.append((j, Scenario(
            horizon_mean=float(mem[:, 1].mean()), horizon_std=float(mem[:, 1].std()),
            dt_mean=float(mem[:, 0].mean()), dt_std=float(mem[:, 0].std()),
            n=len(mem), probability=len(mem) / total, low_support=len(mem) <= min_support,
        )))
    out.sort(key=lambda js: (-js[1].n, js[0]))
    return [s for _, s in out]
