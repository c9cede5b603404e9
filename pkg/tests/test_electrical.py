import math

import numpy as np
import pytest

from hypspin.electrical import (ConvergenceError, MSFunctionEstimator, effective_resistance,
                                ms_function, optimize_scaling, profile_csv,
                                resistance_profile, solve_potential)
from hypspin.graphs import (Graph, build_reference, build_ringed_tree, build_triangulation,
                            contract_boundary)
from hypspin.oracles import dense_resistance

from conftest import small_corpus

TOL = 1e-10

# Frozen from a pilot run of resistance_profile on {3,7} radius 8 (root, free):
# increments 0.195 0.173 0.169 0.170 0.176 0.197 0.325 for d = 1..7.
INCREMENT_BAND = (0.15, 0.35)
RATIO_BAND = (0.18, 0.30)


def test_solve_potential_examples():
    h = solve_potential(build_reference("path", 3), 0, 3)
    np.testing.assert_allclose(h.values, [0, 1, 2, 3], atol=1e-9)
    h = solve_potential(build_reference("cycle", 4), 0, 2)
    np.testing.assert_allclose(h.values, [0, 0.5, 1, 0.5], atol=1e-9)
    k4 = build_reference("complete", 4)
    assert solve_potential(k4, 1, 3).voltage == pytest.approx(0.5, abs=1e-9)
    assert dense_resistance(k4, 1, 3).value == pytest.approx(0.5, abs=1e-12)


def test_potential_field_invariants(tri5):
    h = solve_potential(tri5, 0, 500, TOL)
    assert h.values[0] == 0.0
    res = h.node_residual()
    assert np.abs(res).max() <= TOL
    assert h.current == 1.0


def test_effective_resistance_examples():
    for n in (1, 2, 5, 9):
        assert effective_resistance(build_reference("path", n), 0, n) == pytest.approx(n, abs=1e-9)
    assert effective_resistance(build_reference("cycle", 4), 0, 2) == pytest.approx(1.0, abs=1e-9)
    g = Graph(3, [(0, 1, 1), (1, 2, 1)], boundary=[0, 2])
    assert effective_resistance(g, 1, "boundary", "wired") == pytest.approx(0.5, abs=1e-9)


def test_wired_rejects_boundary_terminal():
    g = build_triangulation(7, 2)
    with pytest.raises(ValueError):
        effective_resistance(g, 0, 20, "wired")
    with pytest.raises(ValueError):
        effective_resistance(g, 0, 0)


def test_nonconvergence_reports_residual():
    g = build_triangulation(7, 4)
    with pytest.raises(ConvergenceError) as info:
        solve_potential(g, 0, 200, 1e-14, maxiter=3)
    assert info.value.residual > 1e-14


@pytest.mark.parametrize("g", small_corpus() + [build_triangulation(7, 2), build_ringed_tree(4),
                                                build_reference("grid", 7)],
                         ids=lambda g: g.label)
def test_thomson_and_dense_oracle(g):
    ys = [v for v in range(1, g.vertex_count)][:: max(1, g.vertex_count // 6)]
    for y in ys:
        h = solve_potential(g, 0, y, TOL)
        assert abs(h.dirichlet_energy() - h.voltage) <= 10 * TOL
        assert h.voltage == pytest.approx(dense_resistance(g, 0, y).value, abs=1e-8)


def test_wired_agrees_with_dense_oracle():
    g = build_triangulation(7, 2)
    w = contract_boundary(g)
    for y in range(1, 8):
        r = effective_resistance(g, 0, y, "wired")
        assert r == pytest.approx(dense_resistance(w, 0, y).value, abs=1e-8)


def test_resistance_profile_path():
    rows = resistance_profile(build_reference("path", 5), 0)
    assert [d for d, _ in rows] == [1, 2, 3, 4, 5]
    np.testing.assert_allclose([r for _, r in rows], [1, 2, 3, 4, 5], atol=1e-9)


def test_free_resistance_linear_in_distance(tri8):
    rows = dict(resistance_profile(tri8, 0, "free"))
    for d in range(2, 8):
        assert INCREMENT_BAND[0] <= rows[d + 1] - rows[d] <= INCREMENT_BAND[1]
        assert RATIO_BAND[0] <= rows[d] / d <= RATIO_BAND[1]


def test_grid_increments_shrink():
    g = build_reference("grid", 41)
    center = 20 * 41 + 20
    rows = dict(resistance_profile(g, center))
    inc = [rows[d + 1] - rows[d] for d in range(2, 8)]
    assert all(a > b for a, b in zip(inc, inc[1:]))


def test_rayleigh_monotonicity_free():
    y = 8  # first ring-2 vertex, same id in every ball
    prev = math.inf
    for r in range(3, 8):
        cur = effective_resistance(build_triangulation(7, r), 0, y)
        assert cur <= prev + 1e-9
        prev = cur


def test_wired_resistance_converges():
    y = 8
    vals = [effective_resistance(build_triangulation(7, r), 0, y, "wired") for r in range(3, 9)]
    inc = np.diff(vals)
    assert np.all(inc >= -1e-9)
    assert inc[-1] < 1e-2


def test_wired_below_free(tri5):
    for y in (1, 8, 40):
        assert effective_resistance(tri5, 0, y, "wired") <= effective_resistance(tri5, 0, y)


def test_profile_csv_format():
    text = profile_csv([(1, 1 / 3), (2, 0.5)], "tri7r2", "free")
    assert text.splitlines() == ["graph,bc,distance,resistance",
                                 "tri7r2,free,1,0.333333333333", "tri7r2,free,2,0.5"]


def test_ms_function_path():
    for d in (1, 3, 8):
        f = ms_function(build_reference("path", d), 0, d)
        assert f.lam == pytest.approx(0.1)
        assert f.gain == pytest.approx(d / 10)
        assert f.energy == pytest.approx(d / 100)
        assert f.c1 == pytest.approx(0.1)
        assert all(f.checks().values())


def test_ms_function_on_triangulation():
    g = build_triangulation(7, 6)
    y = int(np.flatnonzero(g.ring == 6)[0])
    f = ms_function(g, 0, y)
    assert all(f.checks().values())
    assert f.gain > f.c1 * 6 - 1e-15 and f.c1 > 0
    assert f.energy <= 0.5 * f.gain
    assert f.max_gradient <= 0.1


def test_ms_function_caps_lambda_at_half():
    # two vertices joined by many parallel edges: tiny gradient, lambda hits 1/2
    g = Graph(2, [(0, 1, 50)])
    f = ms_function(g, 0, 1)
    assert f.lam == 0.5
    assert all(f.checks().values())


def test_ms_estimator_api(tri5):
    est = MSFunctionEstimator()
    assert est.get_params() == {"tolerance": 1e-10}
    table = est.fit(tri5, [(0, 8), (0, 30)]).transform()
    assert table.shape == (2, 5)
    assert np.all(table[:, 4] > 0)


def grid_search(h, beta, step=1e-4):
    dh = h.edge_drops()
    cap = 0.1 / np.abs(dh).max()
    lams = np.arange(step, cap + step / 2, step)
    lams = np.append(lams[lams < cap], cap)
    vals = [-l * h.voltage + beta * np.sum(h.graph.edge_mult * (np.cosh(l * dh) - 1))
            for l in lams]
    i = int(np.argmin(vals))
    return lams[i], vals[i]


def test_optimize_scaling_examples():
    h = solve_potential(build_reference("path", 1), 0, 1)
    lam, expo = optimize_scaling(h, 1.0)
    assert lam == pytest.approx(0.1)
    assert expo == pytest.approx(-0.1 + math.cosh(0.1) - 1)
    lam, _ = optimize_scaling(h, 1e-9)
    assert lam == pytest.approx(0.1)

    h = solve_potential(build_reference("path", 10), 0, 10)
    lam, expo = optimize_scaling(h, 2.0)
    lam_grid, expo_grid = grid_search(h, 2.0)
    assert abs(lam - lam_grid) < 1e-3
    assert expo <= expo_grid + 1e-12


@pytest.mark.parametrize("beta", [5.0, 20.0, 60.0])
def test_optimize_scaling_interior_minimum(beta):
    g = build_triangulation(7, 4)
    h = solve_potential(g, 0, 100)
    lam, expo = optimize_scaling(h, beta)
    lam_grid, expo_grid = grid_search(h, beta, step=1e-3)
    assert abs(lam - lam_grid) < 1e-3
    assert expo <= 0
    assert expo <= expo_grid + 1e-12


def test_optimize_scaling_rejects_nonpositive_beta():
    h = solve_potential(build_reference("path", 2), 0, 2)
    with pytest.raises(ValueError):
        optimize_scaling(h, 0.0)


def test_linear_gain_holds_in_floating_point(tri8):
    # c1 * d may round above the gain unless c1 is rounded down
    for y in (350, 617, 798):
        f = ms_function(tri8, 0, y)
        assert f.gain >= f.c1 * f.distance and all(f.checks().values())
