import itertools
import math

import numpy as np
import pytest
from scipy import special

from hypspin.graphs import Graph, build_reference, build_triangulation, distances
from hypspin.oracles import (bessel_ratio, brute_force_ising, brute_force_profile,
                             dense_resistance, gibbs_probabilities, o2_path_correlation)


def naive_ising(g, beta, x, y):
    """Plain itertools enumeration, no Gray code."""
    num = den = 0.0
    for s in itertools.product((-1, 1), repeat=g.vertex_count):
        H = -sum(m * s[u] * s[v] for u, v, m in g.edges())
        w = math.exp(-beta * H)
        num += s[x] * s[y] * w
        den += w
    return num / den


@pytest.mark.parametrize("beta", [0.1, 0.5, 1, 2, 5])
def test_single_edge_is_tanh(beta):
    g = build_reference("path", 1)
    assert abs(brute_force_ising(g, beta, 0, 1).value - math.tanh(beta)) < 1e-12


@pytest.mark.parametrize("beta", [0.3, 1.0])
def test_path_of_two(beta):
    g = build_reference("path", 2)
    assert brute_force_ising(g, beta, 0, 2).value == pytest.approx(math.tanh(beta) ** 2, abs=1e-12)


def test_triangle_hand_enumeration():
    # aligned states: H=-3 (2 of them); one odd spin: H=+1 (6 of them, 4 with s0 != s1)
    e = math.e
    expected = (2 * e ** 3 + 2 / e - 4 / e) / (2 * e ** 3 + 6 / e)
    got = brute_force_ising(build_reference("cycle", 3), 1.0, 0, 1).value
    assert got == pytest.approx(expected, abs=1e-14)
    assert got == pytest.approx(0.9305533251033541, abs=1e-14)


@pytest.mark.parametrize("g", [build_reference("tree", 2, 2), build_reference("tree", 2, 3),
                               build_reference("tree", 3, 2), build_reference("path", 6)],
                         ids=lambda g: g.label)
@pytest.mark.parametrize("beta", [0.4, 1.3])
def test_trees_factorise(g, beta):
    dist = distances(g, 0)
    for y in range(1, g.vertex_count):
        assert brute_force_ising(g, beta, 0, y).value == pytest.approx(
            math.tanh(beta) ** dist[y], abs=1e-10)


@pytest.mark.parametrize("g", [build_reference("complete", 4), build_reference("grid", 3),
                               build_triangulation(7, 1)], ids=lambda g: g.label)
def test_gray_code_matches_naive(g):
    for y in (1, g.vertex_count - 1):
        assert brute_force_ising(g, 0.7, 0, y).value == pytest.approx(naive_ising(g, 0.7, 0, y),
                                                                      abs=1e-12)


def test_multigraph_enumeration():
    g = Graph(2, [(0, 1, 3)])
    assert brute_force_ising(g, 0.4, 0, 1).value == pytest.approx(math.tanh(1.2), abs=1e-12)


def test_gibbs_probabilities_normalised():
    p = gibbs_probabilities(build_reference("cycle", 4), 1.0)
    assert p.sum() == pytest.approx(1.0)
    assert p[0] == pytest.approx(p[-1])  # global flip symmetry


def test_profile_matches_pairwise():
    g = build_reference("cycle", 4)
    prof = brute_force_profile(g, 0.8, 0)
    assert prof[0] == pytest.approx(1.0)
    assert prof[1] == pytest.approx(brute_force_ising(g, 0.8, 0, 1).value)
    assert prof[2] == pytest.approx(brute_force_ising(g, 0.8, 0, 2).value)


def test_too_large_rejected():
    with pytest.raises(ValueError):
        brute_force_ising(build_reference("path", 20), 1.0, 0, 1)
    with pytest.raises(ValueError):
        dense_resistance(build_reference("path", 50), 0, 1)


def test_bessel_ratio_examples():
    assert bessel_ratio(0.0).value == 0.0
    assert 0.98 < bessel_ratio(50.0).value < 1.0
    r = bessel_ratio(1.0)
    assert r.value == pytest.approx(0.4464, abs=5e-5)
    assert r.error_bound <= 1e-10


@pytest.mark.parametrize("beta", [0.1, 0.5, 1.0, 2.0, 7.0, 30.0])
def test_bessel_ratio_against_scipy(beta):
    r = bessel_ratio(beta)
    ref = special.i1e(beta) / special.i0e(beta)
    assert abs(r.value - ref) <= max(r.error_bound, 1e-13)


def test_bessel_ratio_monotone():
    vals = [bessel_ratio(b).value for b in np.linspace(0, 10, 101)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_o2_path_correlation():
    assert o2_path_correlation(0, 1.0).value == 1.0
    assert o2_path_correlation(3, 0.0).value == 0.0
    r = o2_path_correlation(3, 1.0)
    assert r.value == pytest.approx(0.4464 ** 3, abs=1e-4)
    assert r.value == pytest.approx(0.0890, abs=1e-4)
    assert r.error_bound < 1e-10


def test_dense_resistance_examples():
    assert dense_resistance(build_reference("path", 4), 0, 4).value == pytest.approx(4, abs=1e-12)
    assert dense_resistance(build_reference("cycle", 4), 0, 2).value == pytest.approx(1, abs=1e-12)
    for m in (3, 4, 7):
        r = dense_resistance(build_reference("complete", m), 0, 1)
        assert abs(r.value - 2 / m) < 1e-12
        assert r.error_bound < 1e-12
