import csv
import json
import math

import numpy as np
import pytest

from bubblelab import cli
from bubblelab.config import PipelineConfig, save_config, updated
from bubblelab.drawdown import PeakFractionSeries
from bubblelab.io import (read_catalog, read_fits, read_peak_fraction, write_fits,
                          write_peak_fraction)
from bubblelab.lppls import FitWindow, LpplsFit, SearchConfig, fit_fan
from bubblelab.synthetic import daily_series, planted_catalog_series
from bubblelab.timeseries import write_csv

FAST = ["--search-n-m", "8", "--search-n-omega", "8", "--search-n-tc", "8",
        "--search-n-starts", "2", "--search-max-evals", "150"]


@pytest.fixture(scope="module")
def prices(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "prices.csv"
    write_csv(daily_series(planted_catalog_series(np.random.default_rng(0))), path)
    return path


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_segment(prices, tmp_path, capsys):
    out = tmp_path / "f.json"
    assert run("segment", "--input", prices, "--out", out) == 0
    doc = json.loads(out.read_text())
    assert doc["n_pairs"] == 550 and len(doc["series"]) == 200
    assert "2012-05-30" in doc["long_peaks"]
    assert json.loads(capsys.readouterr().out)["long_peaks"] == doc["long_peaks"]
    assert all(r["votes"] == round(r["f"] * 550) for r in doc["series"])


def test_start_time(prices, tmp_path, capsys):
    out = tmp_path / "cost.csv"
    assert run("start-time", "--input", prices, "--t2", "2012-05-30", "--out", out, *FAST) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 122
    assert rows[0]["t1_date"] == "2012-01-01" and rows[-1]["dt"] == "30"
    res = json.loads(capsys.readouterr().out)
    assert abs(int(next(r["t1"] for r in rows if r["t1_date"] == res["t1_star"])) - 60) <= 5


def test_start_time_floor(prices, tmp_path, capsys):
    out = tmp_path / "cost.csv"
    assert run("start-time", "--input", prices, "--t2", "2012-05-30", "--floor", "2012-03-15",
               "--out", out, *FAST) == 0
    assert json.loads(capsys.readouterr().out)["t1_star"] >= "2012-03-15"


def test_catalog_and_determinism(prices, tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / f"{name}.csv"
        assert run("catalog", "--input", prices, "--out", out, *FAST) == 0
        outs.append((out.read_bytes(), (tmp_path / f"{name}.provenance.json").read_bytes()))
    assert outs[0] == outs[1]
    rows = read_catalog(tmp_path / "a.csv")
    assert sum(r["qualified"] == "Y" for r in rows) == 1
    (long_row,) = [r for r in rows if r["class"] == "long"]
    assert long_row["peak"] == "2012-05-30"
    prov = json.loads(outs[0][1])
    assert {"config_hash", "library_version", "seed", "input_sha256"} <= set(prov)


def test_resume_from_intermediate(prices, tmp_path):
    inter = tmp_path / "inter"
    first, second, plain = tmp_path / "1.csv", tmp_path / "2.csv", tmp_path / "3.csv"
    assert run("catalog", "--input", prices, "--out", first, "--emit-intermediate", inter, *FAST) == 0
    assert (inter / "peak_fraction.json").exists()
    dumps = sorted(inter.glob("fits_*.csv"))
    assert dumps
    stamp = [p.stat().st_mtime_ns for p in dumps]
    assert run("catalog", "--input", prices, "--out", second, "--emit-intermediate", inter, *FAST) == 0
    assert [p.stat().st_mtime_ns for p in dumps] == stamp
    assert run("catalog", "--input", prices, "--out", plain, *FAST) == 0
    assert first.read_bytes() == second.read_bytes() == plain.read_bytes()


def test_confidence(prices, tmp_path):
    out = tmp_path / "conf.csv"
    assert run("confidence", "--input", prices, "--bands", "short", "--stride", "20",
               "--start", "2012-05-01", "--out", out, *FAST) == 0
    rows = list(csv.DictReader(out.open()))
    assert rows and set(rows[0]) == {"date", "band", "value", "partial"}
    assert all(0.0 <= float(r["value"]) <= 1.0 for r in rows)
    assert {r["band"] for r in rows} == {"short"}


def test_forecast(prices, tmp_path):
    out = tmp_path / "fc.json"
    assert run("forecast", "--input", prices, "--peak", "2012-05-30", "--out", out, *FAST) == 0
    doc = json.loads(out.read_text())
    assert doc["t2"] == "2012-05-20"
    assert doc["n_fits"] >= doc["n_qualified"] >= 0
    if doc["n_qualified"]:
        assert sum(s["n"] for s in doc["scenarios"]) == doc["n_qualified"] == len(doc["points"])
        assert sum(s["probability"] for s in doc["scenarios"]) == pytest.approx(1.0)
    assert "provenance" in doc


def test_forecast_null_series_has_no_clusters(tmp_path):
    rng = np.random.default_rng(3)
    path = tmp_path / "null.csv"
    write_csv(daily_series(3 + np.linspace(0, 0.3, 160)), path)
    out = tmp_path / "fc.json"
    assert run("forecast", "--input", path, "--t2", "2012-06-01", "--out", out, *FAST) == 0
    doc = json.loads(out.read_text())
    assert doc["qualified_pct"] == 0.0 and doc["k"] is None and doc["scenarios"] == []


def test_empty_catalog_warns(tmp_path, capsys):
    path = tmp_path / "down.csv"
    write_csv(daily_series(np.linspace(5, 3, 120)), path)
    out = tmp_path / "cat.csv"
    assert run("catalog", "--input", path, "--out", out, *FAST) == 0
    assert len(read_catalog(out)) == 0
    assert "no peaks" in capsys.readouterr().err


def test_config_file_and_flag_precedence(prices, tmp_path, capsys):
    conf = tmp_path / "c.conf"
    save_config(updated(PipelineConfig(), {"input": str(prices), "search.n_m": 8, "search.n_omega": 8,
                                           "search.n_tc": 8, "search.n_starts": 2,
                                           "search.max_evals": 150, "start.dt_max": 60}), conf)
    out = tmp_path / "cost.csv"
    assert run("start-time", "--config", conf, "--t2", "2012-05-30", "--out", out) == 0
    assert len(list(csv.DictReader(out.open()))) == 31
    assert run("start-time", "--config", conf, "--start-dt-max", "40", "--t2", "2012-05-30",
               "--out", out) == 0
    assert len(list(csv.DictReader(out.open()))) == 11


def test_selftest():
    assert run("selftest") == 0


@pytest.mark.parametrize("argv", [
    ["segment", "--input", "/nonexistent.csv", "--out", "x"],
    ["segment", "--out", "x"],
    ["start-time", "--input", "{prices}", "--t2", "1999-01-01", "--out", "x"],
    ["start-time", "--input", "{prices}", "--t2", "not-a-date", "--out", "x"],
    ["segment", "--input", "{prices}", "--search-n-m", "2.5", "--out", "x"],
    ["segment", "--input", "{prices}", "--config", "/nonexistent.conf", "--out", "x"],
    ["forecast", "--input", "{prices}", "--out", "x"],
    ["confidence", "--input", "{prices}", "--bands", "tiny", "--out", "x"],
])
def test_input_errors_exit_1(argv, prices, tmp_path):
    argv = [a.replace("{prices}", str(prices)).replace("x", str(tmp_path / "o")) if a in ("{prices}", "x")
            else a for a in argv]
    assert run(*argv) == 1


def test_bad_csv_exit_1(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("date,close\n2012-01-01,1\n2012-01-02,-3\n")
    assert run("segment", "--input", path, "--out", tmp_path / "o") == 1


def test_numerical_failures_exit_2(prices, tmp_path):
    assert run("start-time", "--input", prices, "--t2", "2012-01-10", "--out", tmp_path / "o") == 2
    short = tmp_path / "short.csv"
    write_csv(daily_series(np.linspace(1, 2, 40)), short)
    assert run("segment", "--input", short, "--out", tmp_path / "o") == 2


def test_fit_dump_round_trip(tmp_path, rng):
    y = rng.normal(0, 0.02, 300).cumsum()
    fits = fit_fan(y, 299, range(0, 270, 45), SearchConfig(n_m=6, n_omega=6, n_tc=6, n_starts=2,
                                                           max_evals=80))
    fits.append(LpplsFit(FitWindow(280, 299), None, math.inf))
    path = tmp_path / "fits.csv"
    write_fits(fits, path)
    back = read_fits(path)
    assert [(f.window, f.params, f.sse, f.qualified) for f in back] == \
           [(f.window, f.params, f.sse, f.qualified) for f in fits]
    header = path.read_text().splitlines()[0].split(",")
    assert header == ["t1", "t2", "dt", "A", "B", "C1", "C2", "m", "omega", "tc_minus_t2",
                      "sse", "D", "O", "qualified"]


def test_peak_fraction_round_trip(tmp_path):
    dates = daily_series(np.zeros(5)).dates
    f = PeakFractionSeries(dates, np.array([0, 3, 550, 0, 1]), 550)
    path = tmp_path / "f.json"
    write_peak_fraction(f, [2], [], path)
    g = read_peak_fraction(path)
    assert g.dates == f.dates and np.array_equal(g.votes, f.votes) and g.n_pairs == 550
