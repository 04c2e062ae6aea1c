"""End-to-end stages: peak votes, bubble starts, the bubble catalog,
confidence indicators and clustered crash-time forecasts."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .clustering import ClusterResult, Scenario, fit_points, optimal_k, scenario_report
from .config import PipelineConfig, config_hash, flatten
from .confidence import BANDS_BY_NAME, ConfidenceSeries, confidence_series
from .drawdown import (BubbleRecord, PeakFractionSeries, classify_peaks, frame_bubbles,
                       grid_scan, qualify_short)
from .io import read_fits, read_peak_fraction, write_fits, write_peak_fraction
from .lagrange import LagrangeFit, lagrange_start
from .lppls import LpplsFit, fit_fan
from .timeseries import InputError, PriceSeries, load_prices

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    """A numerical failure inside a named pipeline stage."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass
class PeakScan:
    fraction: PeakFractionSeries
    long_peaks: list[int]
    short_peaks: list[int]


@dataclass
class ForecastResult:
    t2: int
    t1_star: int
    lam: float
    n_fits: int
    n_qualified: int
    k: int | None
    silhouette: float | None
    scenarios: list[Scenario]
    points: np.ndarray
    cluster: ClusterResult | None = None

    @property
    def qualified_pct(self) -> float:
        return 100.0 * self.n_qualified / self.n_fits if self.n_fits else 0.0


@dataclass
class CatalogResult:
    records: list[BubbleRecord]
    scan: PeakScan
    starts: dict[int, LagrangeFit] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def load_input(cfg: PipelineConfig) -> PriceSeries:
    if not cfg.input:
        raise InputError("no input file given")
    return load_prices(cfg.input)


def scan_peaks(p: PriceSeries, cfg: PipelineConfig, intermediate: Path | None = None) -> PeakScan:
    cached = intermediate / "peak_fraction.json" if intermediate else None
    if cached is not None and cached.exists():
        frac = read_peak_fraction(cached)
        if frac.dates != p.dates:
            raise InputError(f"{cached} does not match the input series")
    else:
        try:
            frac = grid_scan(p, cfg.grid, cfg.count_open_drawup)
        except ValueError as exc:
            raise StageError("segment", str(exc)) from exc
    long_peaks, short_peaks = classify_peaks(frac, cfg.thresholds.long_lo, cfg.thresholds.short_lo)
    if cached is not None and not cached.exists():
        write_peak_fraction(frac, long_peaks, short_peaks, cached)
    return PeakScan(frac, long_peaks, short_peaks)


def start_fan(logp: np.ndarray, t2: int, cfg: PipelineConfig,
              intermediate: Path | None = None, dates=None) -> list[LpplsFit]:
    """All fits ending at ``t2`` with window sizes in the start-time range."""
    lo = max(0, t2 - cfg.start.dt_max + 1)
    hi = t2 - cfg.start.dt_min + 1
    if hi < lo:
        raise StageError("start-time", f"not enough history before row {t2}")
    label = dates[t2].isoformat() if dates is not None else str(t2)
    cached = intermediate / f"fits_{label}.csv" if intermediate else None
    if cached is not None and cached.exists():
        return read_fits(cached)
    try:
        fits = fit_fan(logp, t2, range(lo, hi + 1, cfg.start.t1_step), cfg.search, cfg.filter,
                       cfg.workers)
    except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        raise StageError("lppls", str(exc)) from exc
    if cached is not None:
        write_fits(fits, cached)
    return fits


def bubble_start(fits: list[LpplsFit], floor: int | None) -> LagrangeFit:
    try:
        return lagrange_start(fits, floor)
    except ValueError as exc:
        raise StageError("start-time", str(exc)) from exc


def run_catalog(cfg: PipelineConfig, p: PriceSeries | None = None,
                intermediate: str | Path | None = None) -> CatalogResult:
    """Peak scan, Lagrange bubble starts, crash framing and short-bubble filter."""
    p = p if p is not None else load_input(cfg)
    inter = Path(intermediate) if intermediate else None
    if inter is not None:
        inter.mkdir(parents=True, exist_ok=True)
    scan = scan_peaks(p, cfg, inter)
    logp = np.log(p.prices)
    result = CatalogResult([], scan)
    timelines = [("long", scan.long_peaks), ("short", scan.short_peaks)]
    if cfg.merge_timelines:
        merged = sorted([(k, "long") for k in scan.long_peaks] + [(k, "short") for k in scan.short_peaks])
        timelines = [("merged", [k for k, _ in merged])]
        klass = dict(merged)
    if not scan.long_peaks and not scan.short_peaks:
        result.warnings.append("no peaks found; catalog is empty")
    for name, peaks in timelines:
        starts, kept, prev = [], [], None
        for k in peaks:
            if k - cfg.start.dt_min + 1 < 0:
                result.warnings.append(f"peak {p.dates[k]} has too little history; skipped")
                continue
            lf = bubble_start(start_fan(logp, k, cfg, inter, p.dates), prev)
            result.starts[k] = lf
            starts.append(lf.t1_star)
            kept.append(k)
            prev = k
        if not kept:
            continue
        recs = frame_bubbles(p, kept, starts)
        for r in recs:
            cls = klass[r.peak_index] if name == "merged" else name
            qualified = True if cls == "long" else qualify_short(
                r, cfg.short_filter.min_days, cfg.short_filter.min_size_pct)
            result.records.append(replace(r, bubble_class=cls, qualified=qualified))
    result.records.sort(key=lambda r: (r.bubble_class != "long", r.peak_index))
    for w in result.warnings:
        log.warning(w)
    return result


def run_forecast(cfg: PipelineConfig, t2: int, p: PriceSeries | None = None,
                 floor: int | None = None, intermediate: str | Path | None = None) -> ForecastResult:
    """Lagrange start at t2, then cluster the qualified fits with t1 >= t1*."""
    p = p if p is not None else load_input(cfg)
    inter = Path(intermediate) if intermediate else None
    if inter is not None:
        inter.mkdir(parents=True, exist_ok=True)
    logp = np.log(p.prices)
    fits = start_fan(logp, t2, cfg, inter, p.dates)
    lf = bubble_start(fits, floor)
    frame = [f for f in fits if f.window.t1 >= lf.t1_star]
    points = fit_points(frame)
    n_q = len(points)
    if n_q == 0:
        return ForecastResult(t2, lf.t1_star, lf.lam, len(frame), 0, None, None, [], points)
    k, res = optimal_k(points, range(cfg.k_min, cfg.k_max + 1), cfg.seed, cfg.kmeans_restarts,
                       cfg.standardize_clusters)
    sil = None if res.fallback else res.silhouette
    return ForecastResult(t2, lf.t1_star, lf.lam, len(frame), n_q, k, sil,
                          scenario_report(res, points), points, res)


def run_confidence(cfg: PipelineConfig, p: PriceSeries | None = None, start: int | None = None,
                   end: int | None = None) -> ConfidenceSeries:
    p = p if p is not None else load_input(cfg)
    try:
        bands = [BANDS_BY_NAME[b] for b in cfg.bands]
    except KeyError as exc:
        raise InputError(f"unknown band {exc.args[0]!r}") from exc
    lo = max(min(b.dt_min for b in bands) - 1, start if start is not None else 0)
    hi = end if end is not None else len(p) - 1
    return confidence_series(np.log(p.prices), range(lo, hi + 1), bands, cfg.stride, cfg.filter,
                             cfg.search, cfg.workers, dates=p.dates)


def provenance(cfg: PipelineConfig, input_path: str | Path | None = None) -> dict:
    doc = {
        "library_version": __version__,
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "config": {k: v for k, v in flatten(cfg).items() if k not in ("input", "workers")},
    }
    if input_path:
        doc["input_sha256"] = hashlib.sha256(Path(input_path).read_bytes()).hexdigest()
    return doc


def forecast_doc(res: ForecastResult, p: PriceSeries) -> dict:
    return {
        "t2": p.dates[res.t2].isoformat(),
        "t1_star": p.dates[res.t1_star].isoformat(),
        "lambda": res.lam,
        "n_fits": res.n_fits,
        "n_qualified": res.n_qualified,
        "qualified_pct": res.qualified_pct,
        "k": res.k,
        "silhouette": res.silhouette,
        "scenarios": [
            {"horizon_mean": s.horizon_mean, "horizon_std": s.horizon_std,
             "dt_mean": s.dt_mean, "dt_std": s.dt_std, "n": s.n,
             "probability": s.probability, "low_support": s.low_support}
            for s in res.scenarios],
        "points": [
            {"dt": float(pt[0]), "horizon": float(pt[1]),
             "cluster": None if res.cluster is None else int(res.cluster.labels[i])}
            for i, pt in enumerate(res.points)],
    }
