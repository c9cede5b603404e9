import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypspin.analysis import (DECAY, INCONCLUSIVE, PLATEAU, DecayClassifier, Thresholds,
                              classify, fit_exponential, magnetisation_proxy, ms_bound,
                              verdict_csv)
from hypspin.electrical import ms_function
from hypspin.graphs import build_reference
from hypspin.spinmc import CorrelationSeries


def series(values, errors=None):
    values = np.asarray(values, dtype=float)
    errors = np.zeros_like(values) if errors is None else np.asarray(errors, dtype=float)
    return CorrelationSeries(np.arange(len(values)), values, errors, 1000)


def with_origin(f, D):
    return [1.0] + [f(d) for d in range(1, D + 1)]


def test_fit_exact_exponential():
    fit = fit_exponential(series(with_origin(lambda d: math.exp(-0.5 * d), 6)))
    assert abs(fit.rate - 0.5) < 1e-12
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.distances_used == (1, 2, 3, 4, 5, 6)


@pytest.mark.parametrize("rate", [0.01, 0.3, 1.7])
def test_fit_recovers_rate(rate):
    fit = fit_exponential(series(with_origin(lambda d: 0.7 * math.exp(-rate * d), 8)))
    assert abs(fit.rate - rate) < 1e-12
    assert fit.intercept == pytest.approx(math.log(0.7))


def test_fit_constant_series_is_degenerate():
    fit = fit_exponential(series([1.0] + [0.8] * 6))
    assert fit.rate == 0.0
    assert fit.status == "degenerate" and math.isnan(fit.r_squared)


def test_fit_noisy_synthetic_against_independent_regression():
    rng = np.random.default_rng(7)
    d = np.arange(1, 9)
    vals = np.exp(-0.3 * d) * (1 + 0.01 * rng.standard_normal(len(d)))
    fit = fit_exponential(series(np.concatenate([[1.0], vals]), 0.001 * np.ones(9)))
    assert 0.25 <= fit.rate <= 0.35
    # closed-form simple regression
    y = np.log(vals)
    slope = np.sum((d - d.mean()) * (y - y.mean())) / np.sum((d - d.mean()) ** 2)
    assert fit.rate == pytest.approx(-slope, abs=1e-12)


def test_fit_insufficient_points():
    fit = fit_exponential(series([1.0, 0.5, -0.1, 0.0, 0.01], [0, 0.01, 0.2, 0.2, 0.2]))
    assert fit.status == "insufficient"
    assert not fit.usable


def test_fit_excludes_noisy_points():
    vals = [1.0, 0.5, 0.25, 0.125, 0.06, 0.01]
    errs = [0.0, 0.01, 0.01, 0.01, 0.01, 0.2]
    assert fit_exponential(series(vals, errs)).distances_used == (1, 2, 3, 4)


def test_classify_examples():
    assert classify(series([1.0] + [0.8] * 6, [0] + [1e-4] * 6)).kind == PLATEAU
    assert classify(series(with_origin(lambda d: math.exp(-d), 6), [0] + [1e-6] * 6)).kind == DECAY
    noise = series([1.0, 0.01, -0.02, 0.005, 0.0, -0.01], [0, 0.3, 0.3, 0.3, 0.3, 0.3])
    assert classify(noise).kind == INCONCLUSIVE


def test_classify_requires_four_distances():
    with pytest.raises(ValueError):
        classify(series([1.0, 0.5, 0.25, 0.1]))


def test_classify_thresholds_are_configurable():
    s = series(with_origin(lambda d: math.exp(-0.04 * d), 6), [0] + [1e-4] * 6)
    assert classify(s).kind == PLATEAU
    assert classify(s, Thresholds(rate_min=0.03)).kind == DECAY


def test_plateau_needs_small_errors():
    s = series([1.0] + [0.5] * 6, [0] + [0.1] * 6)
    assert classify(s).kind == INCONCLUSIVE


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(0.2, 1.0), min_size=4, max_size=8),
       st.floats(1e-5, 0.06))
def test_plateau_survives_upscaling(values, err):
    s = series([1.0] + values, [0.0] + [err] * len(values))
    if classify(s).kind != PLATEAU:
        return
    scaled = series([1.0] + [min(1.0, 1.1 * v) for v in values], s.stderr)
    assert classify(scaled).kind != DECAY


def test_estimator_interface():
    clf = DecayClassifier(rate_min=0.1)
    assert clf.get_params() == {"rate_min": 0.1, "r2_min": 0.9, "level_min": 0.2}
    s = series(with_origin(lambda d: math.exp(-d), 6), [0] + [1e-6] * 6)
    clf.fit(s)
    assert clf.verdict_.kind == DECAY and clf.fit_.rate == pytest.approx(1.0)
    assert clf.predict([s, series([1.0] + [0.9] * 5, [0] + [1e-3] * 5)]).tolist() == [DECAY, PLATEAU]


def test_ms_bound_trivial_function():
    f = ms_function(build_reference("path", 3), 0, 3)
    zero = type(f)(f.graph, np.zeros(4), 0, 3, 0.0, 0.0, 0.0, 0.0, 3)
    assert ms_bound(zero, 1.7) == 1.0


@pytest.mark.parametrize("d", [1, 4, 10])
def test_ms_bound_on_path(d):
    f = ms_function(build_reference("path", d), 0, d)
    assert ms_bound(f, 1.0) == pytest.approx(math.exp(-d / 10 + d * (math.cosh(0.1) - 1)),
                                              rel=1e-12)
    per_edge = -0.1 + (math.cosh(0.1) - 1)
    assert math.cosh(0.1) - 1 == pytest.approx(5.00417e-3, rel=1e-5)
    assert per_edge == pytest.approx(-0.0950, abs=1e-4)
    assert ms_bound(f, 1.0, loss_factor=2.0) >= ms_bound(f, 1.0)


def test_ms_bound_positive():
    f = ms_function(build_reference("grid", 5), 0, 24)
    for beta in (0.1, 1.0, 50.0, 1e4):
        assert ms_bound(f, beta) >= 0


def test_ms_bound_dominates_exact_single_edge():
    from hypspin.oracles import bessel_ratio
    f = ms_function(build_reference("path", 1), 0, 1)
    for beta in (0.2, 1.0, 3.0):
        assert ms_bound(f, beta) >= bessel_ratio(beta).value


def test_magnetisation_proxy_examples():
    total, prods = magnetisation_proxy(series([1.0] * 6), [1] * 6)
    assert total == 6
    D = 7
    total, prods = magnetisation_proxy(series([2.0 ** -d for d in range(D + 1)]),
                                       [2 ** d for d in range(D + 1)])
    assert total == D + 1
    assert np.all(prods == 1)
    with pytest.raises(ValueError):
        magnetisation_proxy(series([1.0, 0.5]), [1, 2, 3])


@given(st.lists(st.tuples(st.floats(-1, 1), st.integers(1, 10 ** 6)), min_size=1, max_size=12))
def test_magnetisation_proxy_matches_loop(pairs):
    est = [p[0] for p in pairs]
    sizes = [p[1] for p in pairs]
    total, _ = magnetisation_proxy(series(est), sizes)
    ref = 0.0
    for e, s in zip(est, sizes):
        ref += s * e
    assert abs(total - ref) <= 1e-12 * max(1.0, sum(abs(s * e) for e, s in zip(est, sizes)))


def test_verdict_csv():
    v = classify(series([1.0] + [0.8] * 6, [0] + [1e-4] * 6))
    text = verdict_csv([("tri7r5", 1, 1.5, "free", v, None)])
    header, row = text.splitlines()
    assert header == "graph,n,beta,bc,verdict,rate,r_squared,plateau_level,ms_bound_at_max_d"
    assert row.startswith("tri7r5,1,1.5,free,plateau,0,nan,0.8,")
