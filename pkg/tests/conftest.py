import datetime as dt

import numpy as np
import pytest
from hypothesis import settings

from bubblelab.timeseries import PriceSeries

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def make_series(prices, start="2012-01-01") -> PriceSeries:
    d0 = dt.date.fromisoformat(start)
    return PriceSeries(tuple(d0 + dt.timedelta(days=i) for i in range(len(prices))),
                       np.asarray(prices, dtype=float))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def record(number, title, passed, detail=""):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
