"""``bubblelab`` command line interface.

Every :class:`PipelineConfig` key is also a flag (``search.n_m`` becomes
``--search-n-m``). Values from ``--config FILE`` are applied first and flags
override them. Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import PipelineConfig, flatten, load_config, updated
from .io import write_catalog, write_json, write_peak_fraction
from .pipeline import (StageError, bubble_start, forecast_doc, provenance, run_catalog,
                       run_confidence, run_forecast, scan_peaks, start_fan)
from .timeseries import InputError, PriceSeries, load_prices, parse_date

log = logging.getLogger("bubblelab")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


def _flag(key: str) -> str:
    return "--" + key.replace(".", "-").replace("_", "-")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("configuration overrides (JSON literal values)")
    for key in flatten(PipelineConfig()):
        if key == "input":
            continue
        group.add_argument(_flag(key), dest="cfg:" + key, metavar="VALUE", default=None)


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=False, help="date,close CSV")
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--emit-intermediate", metavar="DIR",
                        help="write intermediate artifacts to DIR and reuse any found there")
    parser.add_argument("-v", "--verbose", action="store_true")
    _add_config_flags(parser)


def _config(args) -> PipelineConfig:
    try:
        cfg = load_config(args.config) if args.config else PipelineConfig()
    except (OSError, KeyError, ValueError) as exc:
        raise InputError(f"bad config file {args.config}: {exc}") from exc
    changes = {}
    for name, raw in vars(args).items():
        if name.startswith("cfg:") and raw is not None:
            try:
                value = json.loads(raw)
            except json.JSONDecodeError:
                value = raw
            if name == "cfg:bands" and isinstance(value, str):
                value = [b.strip() for b in value.split(",") if b.strip()]
            changes[name[4:]] = value
    if getattr(args, "input", None):
        changes["input"] = args.input
    try:
        return updated(cfg, changes)
    except (KeyError, ValueError) as exc:
        raise InputError(f"bad configuration: {exc}") from exc


def _row(p: PriceSeries, text: str) -> int:
    return p.index_of(parse_date(text))


def cmd_segment(args, cfg: PipelineConfig) -> int:
    p = load_prices(cfg.input)
    scan = scan_peaks(p, cfg)
    write_peak_fraction(scan.fraction, scan.long_peaks, scan.short_peaks, args.out)
    print(json.dumps({"long_peaks": [p.dates[i].isoformat() for i in scan.long_peaks],
                      "short_peaks": [p.dates[i].isoformat() for i in scan.short_peaks]}))
    return EXIT_OK


def cmd_start_time(args, cfg: PipelineConfig) -> int:
    p = load_prices(cfg.input)
    t2 = _row(p, args.t2)
    floor = _row(p, args.floor) if args.floor else None
    inter = Path(args.emit_intermediate) if args.emit_intermediate else None
    if inter:
        inter.mkdir(parents=True, exist_ok=True)
    lf = bubble_start(start_fan(np.log(p.prices), t2, cfg, inter, p.dates), floor)
    with Path(args.out).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t1_date", "t1", "dt", "chi2", "chi2_lambda"])
        for t1, c, cl in zip(lf.t1, lf.chi2, lf.chi2_lambda):
            w.writerow([p.dates[t1].isoformat(), int(t1), t2 - int(t1) + 1, repr(float(c)),
                        repr(float(cl))])
    print(json.dumps({"t2": p.dates[t2].isoformat(), "t1_star": p.dates[lf.t1_star].isoformat(),
                      "lambda": lf.lam}))
    return EXIT_OK


def cmd_catalog(args, cfg: PipelineConfig) -> int:
    p = load_prices(cfg.input)
    res = run_catalog(cfg, p, args.emit_intermediate)
    write_catalog(res.records, args.out)
    prov = provenance(cfg, cfg.input)
    prov["warnings"] = res.warnings
    prov["bubble_starts"] = {p.dates[k].isoformat(): {"t1_star": p.dates[lf.t1_star].isoformat(),
                                                      "lambda": lf.lam}
                             for k, lf in sorted(res.starts.items())}
    prov_path = args.provenance or str(Path(args.out).with_suffix("")) + ".provenance.json"
    write_json(prov, prov_path)
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_confidence(args, cfg: PipelineConfig) -> int:
    p = load_prices(cfg.input)
    start = _row(p, args.start) if args.start else None
    end = _row(p, args.end) if args.end else None
    series = run_confidence(cfg, p, start, end)
    with Path(args.out).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "band", "value", "partial"])
        for j, t2 in enumerate(series.t2):
            for b in series.bands:
                w.writerow([p.dates[t2].isoformat(), b, repr(float(series.values[b][j])),
                            int(series.partial[b][j])])
    return EXIT_OK


def cmd_forecast(args, cfg: PipelineConfig) -> int:
    p = load_prices(cfg.input)
    if args.t2:
        t2 = _row(p, args.t2)
    elif args.peak:
        t2 = _row(p, args.peak) - cfg.forecast_offset
        if t2 < 0:
            raise InputError("forecast offset reaches before the series start")
    else:
        raise InputError("forecast needs --t2 or --peak")
    floor = _row(p, args.floor) if args.floor else None
    res = run_forecast(cfg, t2, p, floor, args.emit_intermediate)
    doc = forecast_doc(res, p)
    doc["provenance"] = provenance(cfg, cfg.input)
    write_json(doc, args.out)
    return EXIT_OK


def cmd_selftest(args, cfg: PipelineConfig) -> int:
    from .selftest import run_selftest
    return EXIT_OK if run_selftest() else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bubblelab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("segment", help="peak-vote fractions and long/short peaks")
    _common(s)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_segment)

    s = sub.add_parser("start-time", help="Lagrange-regularised bubble start at t2")
    _common(s)
    s.add_argument("--t2", required=True)
    s.add_argument("--floor", help="earliest admissible start date")
    s.add_argument("--out", required=True, help="cost-curve CSV")
    s.set_defaults(func=cmd_start_time)

    s = sub.add_parser("catalog", help="full bubble catalog")
    _common(s)
    s.add_argument("--out", required=True)
    s.add_argument("--provenance", help="provenance JSON (default: next to --out)")
    s.set_defaults(func=cmd_catalog)

    s = sub.add_parser("confidence", help="multiscale confidence indicators")
    _common(s)
    s.add_argument("--start", help="first analysis date")
    s.add_argument("--end", help="last analysis date")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_confidence)

    s = sub.add_parser("forecast", help="clustered crash-time scenarios at t2")
    _common(s)
    s.add_argument("--t2")
    s.add_argument("--peak", help="place t2 forecast-offset rows before this date")
    s.add_argument("--floor", help="earliest admissible start date")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_forecast)

    s = sub.add_parser("selftest", help="quick internal consistency checks")
    s.set_defaults(func=cmd_selftest, config=None, input=None, verbose=False)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if args.command not in ("selftest",) and not cfg.input:
            raise InputError("--input (or 'input' in the config file) is required")
        return args.func(args, cfg)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (StageError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
