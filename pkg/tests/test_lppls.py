import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bubblelab import _kernels
from bubblelab.lppls import (FilterConfig, FitWindow, LpplsFit, LpplsParams, SearchConfig,
                             damping, evaluate, fit_fan, fit_window, oscillations, qualify,
                             requalify, slave_linear, synthetic_log_prices)
from bubblelab.oracles import design_matrix, lstsq_linear

FAST = SearchConfig(n_m=12, n_omega=12, n_tc=12, n_starts=4, max_evals=300)


def _bubble(rng, n=200, h=15.0, noise=0.0):
    m, w = rng.uniform(0.3, 0.7), rng.uniform(6, 12)
    tc = n - 1 + h
    B = -1.0 / (tc ** m - h ** m)
    c = 0.5 * m / w * abs(B)
    ph = rng.uniform(0, 2 * math.pi)
    p = LpplsParams(5.0, B, c * math.cos(ph), c * math.sin(ph), m, w, tc)
    return p, synthetic_log_prices(p, n) + rng.normal(0, noise, n) * (noise > 0)


def test_evaluate_flat():
    p = LpplsParams(3.0, 0.0, 0.0, 0.0, 0.4, 8.0, 50.0)
    assert np.all(evaluate(p, np.arange(50)) == 3.0)


def test_evaluate_pure_power_law():
    assert evaluate(LpplsParams(0.0, -1.0, 0.0, 0.0, 0.5, 10.0, 100.0), 96) == -2.0


def test_evaluate_rejects_t_at_tc():
    with pytest.raises(ValueError):
        evaluate(LpplsParams(0, -1, 0, 0, 0.5, 10, 100.0), [99.0, 100.0])


def test_evaluate_high_precision_oracle(rng):
    mpmath.mp.dps = 40
    for _ in range(20):
        p = LpplsParams(*rng.normal(0, 1, 4), rng.uniform(0.05, 0.95), rng.uniform(1, 30),
                        rng.uniform(50, 300))
        t = rng.uniform(0, p.tc - 0.5)
        tau = mpmath.mpf(p.tc) - mpmath.mpf(t)
        lt = mpmath.log(tau)
        ref = p.A + tau ** p.m * (p.B + p.C1 * mpmath.cos(p.omega * lt)
                                  + p.C2 * mpmath.sin(p.omega * lt))
        assert abs(evaluate(p, t) - float(ref)) <= 1e-12 * max(1.0, abs(float(ref)))


def test_slaving_recovers_exact_parameters(rng):
    for _ in range(20):
        p, y = _bubble(rng, n=int(rng.integers(30, 400)))
        A, B, C1, C2, sse = slave_linear(p.tc, p.m, p.omega, np.arange(len(y)), y)
        assert np.allclose([A, B, C1, C2], [p.A, p.B, p.C1, p.C2], rtol=0, atol=1e-8)
        assert sse < 1e-16


def _random_instance(rng):
    n = int(rng.integers(30, 721))
    t = np.arange(n, dtype=float)
    tc = n - 1 + rng.uniform(0.5, n)
    m, w = rng.uniform(0.05, 0.95), rng.uniform(1.5, 45)
    y = rng.normal(0, 0.03, n).cumsum() + rng.uniform(-3, 3)
    return t, y, tc, m, w


def test_slaving_matches_lstsq(rng):
    for _ in range(100):
        t, y, tc, m, w = _random_instance(rng)
        ours = np.array(slave_linear(tc, m, w, t, y)[:4])
        ref = lstsq_linear(t, y, tc, m, w)
        assert np.linalg.norm(ours - ref) <= 1e-9 * np.linalg.norm(ref)


def test_slaved_sse_beats_random_perturbations(rng):
    t, y, tc, m, w = _random_instance(rng)
    *beta, sse = slave_linear(tc, m, w, t, y)
    X = design_matrix(t, tc, m, w)
    beta = np.array(beta)
    assert sse == pytest.approx(float(((y - X @ beta) ** 2).sum()), rel=1e-9)
    scale = np.abs(beta) + 1e-6
    for _ in range(1000):
        b = beta + rng.normal(0, 1e-3, 4) * scale
        assert sse <= float(((y - X @ b) ** 2).sum()) * (1 + 1e-12)


def test_linear_gradient_vanishes(rng):
    for _ in range(20):
        t, y, tc, m, w = _random_instance(rng)
        *beta, sse = slave_linear(tc, m, w, t, y)
        X = design_matrix(t, tc, m, w)
        F = lambda b: float(((y - X @ b) ** 2).sum())
        beta = np.array(beta)
        for j in range(4):
            hstep = 1e-6 * max(1.0, abs(beta[j]))
            e = np.zeros(4)
            e[j] = hstep
            g = (F(beta + e) - F(beta - e)) / (2 * hstep)
            assert abs(g) < 1e-6 * sse


def test_slaving_degenerate_and_errors():
    t = np.arange(40, dtype=float)
    with pytest.raises(np.linalg.LinAlgError):
        # omega = 0 makes the sine column vanish
        slave_linear(100.0, 0.5, 0.0, t, np.sin(t))
    with pytest.raises(ValueError):
        slave_linear(39.0, 0.5, 5.0, t, t)
    with pytest.raises(ValueError):
        slave_linear(10.0, 0.5, 5.0, t[:3], t[:3])


def test_fit_recovers_noiseless_bubble(rng):
    hits = 0
    for _ in range(5):
        p, y = _bubble(rng, n=int(rng.integers(120, 300)), h=rng.uniform(5, 30))
        fit = fit_window(y)
        hits += (abs(fit.params.tc - p.tc) <= 1 and abs(fit.params.m - p.m) <= 0.02
                 and abs(fit.params.omega - p.omega) <= 0.2)
    assert hits >= 4


def test_linear_trend_not_qualified():
    y = 0.002 * np.arange(200) + 1.0
    assert not fit_window(y).qualified


def test_flat_window_is_no_fit():
    fit = fit_window(np.full(40, 2.0))
    assert fit.params is None and not fit.ok and not fit.qualified


def test_fit_window_length_checks():
    with pytest.raises(ValueError):
        fit_window(np.arange(29.0))
    with pytest.raises(ValueError):
        fit_window(np.arange(40.0), window=FitWindow(0, 40))


def test_refined_sse_not_above_best_grid_point(rng):
    for _ in range(5):
        y = rng.normal(0, 0.02, int(rng.integers(30, 200))).cumsum()
        n = len(y)
        t = np.arange(n, dtype=float)
        span = n - 1.0
        hs = np.linspace(0, span, FAST.n_tc + 2)[1:-1]
        ms = np.linspace(0, 1, FAST.n_m + 2)[1:-1]
        ws = np.linspace(1, 50, FAST.n_omega + 2)[1:-1]
        grid = _kernels.grid_costs(t, y, span + hs, ms, ws)
        fit = fit_window(y, FAST)
        assert fit.sse <= np.nanmin(grid) * (1 + 1e-9)


def test_fit_is_deterministic(rng):
    y = rng.normal(0, 0.02, 150).cumsum()
    a, b = fit_window(y, FAST), fit_window(y, FAST)
    assert a == b


def test_translation_moves_only_A(rng):
    p, y = _bubble(rng, n=150, noise=0.005)
    a, b = fit_window(y, FAST), fit_window(y + 2.5, FAST)
    assert b.params.A - a.params.A == pytest.approx(2.5, abs=1e-6)
    for name in ("B", "C1", "C2", "m", "omega", "tc"):
        assert getattr(b.params, name) == pytest.approx(getattr(a.params, name), rel=1e-4, abs=1e-6)


def _fit(B=-1.0, m=0.5, omega=10.0, h=5.0, dt=100, C1=0.01, C2=0.0):
    p = LpplsParams(0.0, B, C1, C2, m, omega, dt - 1 + h)
    return LpplsFit(FitWindow(0, dt - 1), p, 0.0, damping(p), oscillations(p, dt))


def test_qualify_hand_example():
    f = _fit()
    assert damping(f.params) == pytest.approx(5.0)
    assert qualify(f)


@pytest.mark.parametrize("kw", [dict(B=0.1), dict(omega=3.9), dict(omega=25.1), dict(m=1.0),
                                dict(m=0.0), dict(h=0.0), dict(h=100.0), dict(C1=2.0)])
def test_qualify_rejections(kw):
    assert not qualify(_fit(**kw))


def test_qualify_oscillation_filter():
    # |C/B| = 0.1 switches the oscillation count on; O = (10/2pi) ln(104/5) > 2.5
    assert qualify(_fit(C1=0.1))
    assert not qualify(_fit(C1=0.1, omega=4.0, h=50.0))
    assert qualify(_fit(C1=0.01, omega=4.0, h=50.0))


def test_qualify_no_fit():
    assert not qualify(LpplsFit(FitWindow(0, 99), None, math.inf))


def test_oscillation_count_formula():
    p = LpplsParams(0, -1, 0.1, 0, 0.5, 2 * math.pi, 100.0 + 79)
    assert oscillations(p, 100) == pytest.approx(math.log(179 / 80))


@settings(max_examples=40)
@given(st.floats(-2, 0.5), st.floats(0.01, 0.99), st.floats(2, 30), st.floats(0.5, 150),
       st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_qualify_is_pure(B, m, omega, h, C1, C2):
    p = LpplsParams(0.0, B, C1, C2, m, omega, 99 + h)
    f = LpplsFit(FitWindow(0, 99), p, 0.0, damping(p), oscillations(p, 100))
    assert qualify(f) == qualify(f) == requalify([f], FilterConfig())[0].qualified


def test_fan_sizes_and_order(rng):
    y = rng.normal(0, 0.02, 760).cumsum()
    t2 = 749
    single = fit_fan(y, t2, [700], FAST)
    assert len(single) == 1 and single[0].window == FitWindow(700, t2)
    t1s = range(t2 - 719, t2 - 28)
    assert len(t1s) == 691
    few = fit_fan(y, t2, t1s[::230], FAST)
    assert [f.window.t1 for f in few] == list(t1s[::230])


def test_fan_window_checks(rng):
    y = rng.normal(0, 0.02, 100).cumsum()
    with pytest.raises(ValueError):
        fit_fan(y, 99, [80], FAST)
    with pytest.raises(ValueError):
        fit_fan(y, 100, [0], FAST)


def test_fan_parallel_equals_serial(rng):
    y = rng.normal(0, 0.02, 120).cumsum()
    t1s = range(0, 60, 20)
    assert fit_fan(y, 119, t1s, FAST) == fit_fan(y, 119, t1s, FAST, workers=2)


@pytest.mark.slow
def test_fan_power_probe(rng):
    p, bub = _bubble(rng, n=250, h=8.0, noise=0.005)
    noise = rng.normal(0, 0.01, 250).cumsum()
    bubble_fitted = [f.qualified for f in fit_fan(bub, 249, range(0, 200, 10), FAST)]
    null_fitted = [f.qualified for f in fit_fan(noise, 249, range(0, 200, 10), FAST)]
    assert np.mean(bubble_fitted) > 0.9
    assert np.mean(null_fitted) < 0.2
