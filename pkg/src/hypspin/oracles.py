"""Exact small-instance references: enumeration, quadrature, dense solves.

Nothing here shares code with the Monte Carlo kernels or the CG solver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graphs import Graph


@dataclass(frozen=True)
class ExactResult:
    value: float
    method: str
    error_bound: float

    def __float__(self):
        return self.value


def _gray_code_energies(g: Graph) -> np.ndarray:
    """H(s) for every s in {+-1}^V, visited in Gray-code order.

    Returns energies indexed by the state bitmask (bit v set when s_v = +1).
    """
    V = g.vertex_count
    nbrs = [g.neighbors(v) for v in range(V)]
    s = [-1] * V
    H = float(sum(m for _, _, m in g.edges()))  # all spins equal: H = -sum mult
    H = -H
    out = np.empty(2 ** V)
    state = 0
    out[state] = H
    for i in range(1, 2 ** V):
        v = (i & -i).bit_length() - 1  # bit flipped between gray(i-1) and gray(i)
        field = sum(m * s[w] for w, m in nbrs[v])
        # flipping s_v changes -s_v*field into +s_v*field
        H += 2 * s[v] * field
        s[v] = -s[v]
        state ^= 1 << v
        out[state] = H
    return out


def _state_spins(V: int) -> np.ndarray:
    states = np.arange(2 ** V)
    return np.where((states[:, None] >> np.arange(V)) & 1, 1.0, -1.0)


def gibbs_probabilities(g: Graph, beta: float) -> np.ndarray:
    """Exact Ising Gibbs probabilities over all 2^V states."""
    if g.vertex_count > 20:
        raise ValueError("enumeration limited to 20 vertices")
    logw = -beta * _gray_code_energies(g)
    logw -= logw.max()
    w = np.exp(logw)
    return w / w.sum()


def brute_force_ising(g: Graph, beta: float, x: int, y: int) -> ExactResult:
    """Exact Ising ``<s_x s_y>`` by summing over all 2^V configurations."""
    if g.vertex_count > 20:
        raise ValueError(f"brute force limited to 20 vertices, got {g.vertex_count}")
    p = gibbs_probabilities(g, beta)
    spins = _state_spins(g.vertex_count)
    value = float(np.sum(p * spins[:, x] * spins[:, y]))
    return ExactResult(value, "enumeration", 2 ** g.vertex_count * 1e-16)


def brute_force_profile(g: Graph, beta: float, center: int = 0) -> np.ndarray:
    """Exact sphere-averaged Ising correlations from ``center``."""
    from .graphs import distances
    p = gibbs_probabilities(g, beta)
    spins = _state_spins(g.vertex_count)
    corr = (p[:, None] * spins * spins[:, [center]]).sum(axis=0)
    dist = distances(g, center)
    return np.bincount(dist, weights=corr) / np.bincount(dist)


def _adaptive_simpson(f, a, b, tol):
    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        delta = left + right - whole
        if depth <= 0 or abs(delta) < 15 * tol:
            return left + right + delta / 15.0, abs(delta) / 15.0
        l_val, l_err = rec(a, m, fa, flm, fm, left, tol / 2, depth - 1)
        r_val, r_err = rec(m, b, fm, frm, fb, right, tol / 2, depth - 1)
        return l_val + r_val, l_err + r_err

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return rec(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 50)


def bessel_ratio(beta: float) -> ExactResult:
    """Single-edge O(2) correlation ``I1(beta) / I0(beta)`` by quadrature.

    Both integrals are taken over [0, pi] with the weight rescaled by
    ``exp(-beta)`` so large beta does not overflow.
    """
    if beta < 0:
        raise ValueError("beta must be non-negative")
    if beta == 0:
        return ExactResult(0.0, "odd integrand", 0.0)
    tol = 1e-13
    num, e_num = _adaptive_simpson(lambda t: math.cos(t) * math.exp(beta * (math.cos(t) - 1)),
                                   0.0, math.pi, tol)
    den, e_den = _adaptive_simpson(lambda t: math.exp(beta * (math.cos(t) - 1)),
                                   0.0, math.pi, tol)
    value = num / den
    bound = (e_num + abs(value) * e_den) / den
    return ExactResult(value, "adaptive simpson", bound)


def o2_path_correlation(d: int, beta: float) -> ExactResult:
    """O(2) correlation across ``d`` edges of a free path: the edge angle
    increments are independent, so the correlation is ``ratio**d``."""
    if d < 0:
        raise ValueError("d must be non-negative")
    if d == 0:
        return ExactResult(1.0, "trivial", 0.0)
    r = bessel_ratio(beta)
    value = r.value ** d
    bound = d * abs(r.value) ** (d - 1) * r.error_bound if r.value else r.error_bound
    return ExactResult(value, "bessel ratio power", bound)


def dense_resistance(g: Graph, x: int, y: int) -> ExactResult:
    """Effective resistance by a dense solve of the Laplacian grounded at ``x``."""
    V = g.vertex_count
    if V > 50:
        raise ValueError(f"dense solve limited to 50 vertices, got {V}")
    if x == y:
        raise ValueError("terminals must differ")
    L = np.zeros((V, V))
    for u, v, m in g.edges():
        L[u, v] -= m
        L[v, u] -= m
        L[u, u] += m
        L[v, v] += m
    keep = [v for v in range(V) if v != x]
    A = L[np.ix_(keep, keep)]
    b = np.zeros(V - 1)
    b[keep.index(y)] = 1.0
    phi = np.linalg.solve(A, b)
    residual = float(np.abs(A @ phi - b).max())
    # |dphi| <= ||A^-1|| * residual
    bound = residual * float(np.linalg.norm(np.linalg.inv(A), 2))
    return ExactResult(float(phi[keep.index(y)]), "dense solve", bound)
