"""Readers and writers for the CSV/JSON artifacts the pipeline emits."""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from .drawdown import BubbleRecord, PeakFractionSeries
from .lppls import FitWindow, LpplsFit, LpplsParams

FIT_COLUMNS = ["t1", "t2", "dt", "A", "B", "C1", "C2", "m", "omega", "tc_minus_t2",
               "sse", "D", "O", "qualified"]

CATALOG_COLUMNS = ["nr", "class", "start", "peak", "crash_end", "p_peak", "p_crash_end",
                   "duration_days", "bubble_size_pct", "crash_size_pct", "qualified"]


def _num(x: float) -> str:
    return repr(float(x))


def write_fits(fits: Sequence[LpplsFit], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIT_COLUMNS)
        for f in fits:
            p = f.params
            if p is None:
                vals = ["nan"] * 7
            else:
                vals = [_num(v) for v in (p.A, p.B, p.C1, p.C2, p.m, p.omega, f.tc_minus_t2)]
            w.writerow([f.window.t1, f.window.t2, f.window.dt, *vals, _num(f.sse),
                        _num(f.damping), _num(f.oscillations), int(f.qualified)])


def read_fits(path: str | Path) -> list[LpplsFit]:
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            t1, t2, dt = int(row["t1"]), int(row["t2"]), int(row["dt"])
            window = FitWindow(t1, t2)
            if window.dt != dt:
                raise ValueError(f"{path}: inconsistent dt for t1={t1}")
            h = float(row["tc_minus_t2"])
            if math.isnan(h):
                params = None
            else:
                # tc - (dt - 1) is exact for tc in (dt - 1, 2 (dt - 1)), so this round-trips
                params = LpplsParams(float(row["A"]), float(row["B"]), float(row["C1"]),
                                     float(row["C2"]), float(row["m"]), float(row["omega"]),
                                     h + (dt - 1))
            out.append(LpplsFit(window, params, float(row["sse"]), float(row["D"]),
                                float(row["O"]), bool(int(row["qualified"]))))
    return out


def write_peak_fraction(f: PeakFractionSeries, long_peaks: Sequence[int], short_peaks: Sequence[int],
                        path: str | Path) -> None:
    doc = {
        "n_pairs": int(f.n_pairs),
        "series": [{"date": d.isoformat(), "votes": int(v), "f": float(v) / f.n_pairs}
                   for d, v in zip(f.dates, f.votes)],
        "long_peaks": [f.dates[i].isoformat() for i in long_peaks],
        "short_peaks": [f.dates[i].isoformat() for i in short_peaks],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def read_peak_fraction(path: str | Path) -> PeakFractionSeries:
    doc = json.loads(Path(path).read_text())
    dates = tuple(_dt.date.fromisoformat(r["date"]) for r in doc["series"])
    votes = np.array([r["votes"] for r in doc["series"]], dtype=np.int64)
    return PeakFractionSeries(dates, votes, int(doc["n_pairs"]))


def _opt(x, fmt):
    return "" if x is None else fmt(x)


def write_catalog(records: Sequence[BubbleRecord], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CATALOG_COLUMNS)
        counters = {"long": 0, "short": 0}
        for r in records:
            counters[r.bubble_class] += 1
            w.writerow([
                counters[r.bubble_class], r.bubble_class, r.start.isoformat(), r.peak.isoformat(),
                _opt(r.crash_end, lambda d: d.isoformat()), _num(r.price_peak),
                _opt(r.price_crash_end, _num), r.duration_days, _num(r.size_pct),
                _opt(r.crash_size_pct, _num), "Y" if r.qualified else "N",
            ])


def read_catalog(path: str | Path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def write_json(doc, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
