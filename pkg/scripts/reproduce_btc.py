"""Rebuild the btc/usd bubble catalog, the long-bubble forecasts and the
confidence indicators from a user-supplied daily ``date,close`` file.

    python scripts/reproduce_btc.py btc_usd.csv --out results/
"""

import argparse
from pathlib import Path

from bubblelab.config import PipelineConfig, updated
from bubblelab.io import write_catalog, write_json
from bubblelab.pipeline import forecast_doc, provenance, run_catalog, run_confidence, run_forecast
from bubblelab.timeseries import load_prices

# analysis dates and start floors used for the long-bubble forecasts
FORECASTS = [("2013-03-28", None), ("2013-11-22", "2013-04-09"), ("2017-12-06", "2013-12-04")]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("prices")
    ap.add_argument("--out", default="btc_results")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--skip-confidence", action="store_true")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    full = load_prices(args.prices)
    p = full.slice(full.index_of("2012-01-01"), full.index_of("2018-02-28") + 1)
    cfg = updated(PipelineConfig(), {"input": args.prices, "workers": args.workers})

    res = run_catalog(cfg, p, out / "intermediate")
    write_catalog(res.records, out / "catalog.csv")
    for r in res.records:
        print(f"{r.bubble_class:5s} {r.start} {r.peak} {r.crash_end} "
              f"{r.duration_days:4d}d {r.size_pct:8.1f}% {r.crash_size_pct or float('nan'):7.2f}% "
              f"{'Y' if r.qualified else 'N'}")

    for t2_date, floor_date in FORECASTS:
        floor = p.index_of(floor_date) if floor_date else None
        fc = run_forecast(cfg, p.index_of(t2_date), p, floor, out / "intermediate")
        doc = forecast_doc(fc, p)
        write_json(doc, out / f"forecast_{t2_date}.json")
        print(f"forecast {t2_date}: {fc.qualified_pct:.0f}% qualified, k={fc.k}, "
              f"s={fc.silhouette if fc.silhouette is None else round(fc.silhouette, 2)}")

    if not args.skip_confidence:
        series = run_confidence(cfg, p)
        with (out / "confidence.csv").open("w") as fh:
            fh.write("date,band,value,partial\n")
            for j, d in enumerate(series.dates):
                for b in series.bands:
                    fh.write(f"{d.isoformat()},{b},{series.values[b][j]!r},"
                             f"{int(series.partial[b][j])}\n")
    write_json(provenance(cfg, args.prices), out / "provenance.json")


if __name__ == "__main__":
    main()
