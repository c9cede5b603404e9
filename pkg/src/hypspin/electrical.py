"""Electrical networks on finite graphs: potentials, effective resistance and
the McBryan-Spencer translation function.

Each edge of multiplicity m is a conductor of m siemens (m parallel 1-ohm
resistors).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from sklearn.base import BaseEstimator

from .graphs import Graph, contract_boundary, distances, wired_vertex_map

FREE, WIRED = "free", "wired"
WIRED_VERTEX = "boundary"

DEFAULT_TOL = 1e-10


class ConvergenceError(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"CG did not converge in {iterations} iterations "
                         f"(residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class PotentialField:
    """Unit-current potential: ``values[source] = 0`` and ``values[sink]`` is
    the effective resistance."""
    graph: Graph = field(repr=False)
    values: np.ndarray = field(repr=False)
    source: int
    sink: int
    current: float = 1.0
    residual: float = 0.0
    iterations: int = 0

    @property
    def voltage(self) -> float:
        return float(self.values[self.sink] - self.values[self.source])

    def edge_drops(self) -> np.ndarray:
        g = self.graph
        return self.values[g.edge_v] - self.values[g.edge_u]

    def dirichlet_energy(self) -> float:
        return float(np.sum(self.graph.edge_mult * self.edge_drops() ** 2))

    def node_residual(self) -> np.ndarray:
        """Net outflow at every vertex, minus the injected current at the
        terminals. Zero everywhere for an exact solution."""
        net = laplacian(self.graph) @ self.values
        net[self.sink] -= self.current
        net[self.source] += self.current
        return net


def laplacian(g: Graph) -> sp.csr_matrix:
    w = g.mult.astype(float)
    adj = sp.csr_matrix((w, g.indices, g.indptr), shape=(g.vertex_count,) * 2)
    return (sp.diags(np.asarray(adj.sum(axis=1)).ravel()) - adj).tocsr()


def conjugate_gradient(A, b, tol=DEFAULT_TOL, maxiter=None, precond=None):
    """Preconditioned CG for SPD ``A``; stops on max-norm residual <= tol.

    Returns ``(x, residual, iterations)``; raises ConvergenceError past
    ``maxiter``.
    """
    n = len(b)
    maxiter = 20 * n if maxiter is None else maxiter
    x = np.zeros(n)
    r = b.copy()
    z = r * precond if precond is not None else r.copy()
    p = z.copy()
    rz = r @ z
    res = np.abs(r).max() if n else 0.0
    it = 0
    while res > tol:
        if it >= maxiter:
            raise ConvergenceError(res, it)
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        it += 1
        if it % 50 == 0:
            r = b - A @ x
        res = np.abs(r).max()
        z = r * precond if precond is not None else r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, res, it


def solve_potential(g: Graph, source: int, sink: int, tolerance: float = DEFAULT_TOL,
                    maxiter: int | None = None) -> PotentialField:
    """Potential driving one ampere from ``sink`` to ``source``, grounded at
    ``source``."""
    if source == sink:
        raise ValueError("source and sink must differ")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    n = g.vertex_count
    for v in (source, sink):
        if not 0 <= v < n:
            raise ValueError(f"vertex {v} not in graph")
    L = laplacian(g)
    keep = np.delete(np.arange(n), source)
    A = L[keep][:, keep]
    b = np.zeros(n - 1)
    b[sink - (sink > source)] = 1.0
    diag = A.diagonal()
    if np.any(diag == 0):
        raise ValueError("graph is not connected")
    x, res, it = conjugate_gradient(A, b, tolerance, maxiter, 1.0 / diag)
    values = np.zeros(n)
    values[keep] = x
    return PotentialField(g, values, int(source), int(sink), 1.0, float(res), it)


def _wired_terminal(g: Graph, wired: Graph, mapping, v) -> int:
    if isinstance(v, str):
        if v != WIRED_VERTEX:
            raise ValueError(f"unknown terminal {v!r}")
        return wired.vertex_count - 1
    if int(v) in g.boundary:
        raise ValueError(f"vertex {v} lies in the wired boundary; "
                         f"use {WIRED_VERTEX!r} for the contracted vertex")
    return int(mapping[int(v)])


def effective_resistance(g: Graph, x, y, bc: str = FREE,
                         tolerance: float = DEFAULT_TOL) -> float:
    """Effective resistance between ``x`` and ``y``.

    With ``bc="wired"`` the boundary is contracted first; pass ``"boundary"``
    as a terminal to mean the contracted vertex.
    """
    if bc == FREE:
        if isinstance(x, str) or isinstance(y, str):
            raise ValueError("the contracted boundary exists only for wired bc")
        return solve_potential(g, int(x), int(y), tolerance).voltage
    if bc != WIRED:
        raise ValueError(f"unknown boundary condition {bc!r}")
    wired = contract_boundary(g)
    mapping = wired_vertex_map(g)
    xs, ys = (_wired_terminal(g, wired, mapping, v) for v in (x, y))
    if xs == ys:
        raise ValueError("terminals coincide")
    return solve_potential(wired, xs, ys, tolerance).voltage


def resistance_profile(g: Graph, center: int, bc: str = FREE,
                       tolerance: float = DEFAULT_TOL,
                       sphere_average: bool = False) -> list[tuple[int, float]]:
    """Resistance from ``center`` to the smallest-id vertex at each distance.

    Under wired bc, targets on the boundary are the contracted vertex.
    ``sphere_average`` averages over the whole sphere instead.
    """
    dist = distances(g, center)
    if np.any(dist < 0):
        raise ValueError("graph is not connected")
    if bc == WIRED:
        if center in g.boundary:
            raise ValueError("center lies in the wired boundary")
        solved = contract_boundary(g)
        mapping = wired_vertex_map(g)
    elif bc == FREE:
        solved, mapping = g, np.arange(g.vertex_count)
    else:
        raise ValueError(f"unknown boundary condition {bc!r}")

    cache: dict[int, float] = {}

    def resist(v):
        t = int(mapping[v])
        if t not in cache:
            cache[t] = solve_potential(solved, int(mapping[center]), t, tolerance).voltage
        return cache[t]

    out = []
    for d in range(1, int(dist.max()) + 1):
        sphere = np.flatnonzero(dist == d)
        if sphere_average:
            out.append((d, float(np.mean([resist(v) for v in sphere]))))
        else:
            out.append((d, resist(int(sphere[0]))))
    return out


def profile_csv(rows, graph_label: str, bc: str) -> str:
    lines = ["graph,bc,distance,resistance"]
    lines += [f"{graph_label},{bc},{d},{r:.12g}" for d, r in rows]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class MSFunction:
    """Translation function ``a = lam * h`` for the complex shift argument."""
    graph: Graph = field(repr=False)
    a: np.ndarray = field(repr=False)
    x: int
    y: int
    lam: float
    c1: float
    energy: float
    max_gradient: float
    distance: int

    @property
    def gain(self) -> float:
        """``a(y) - a(x)``."""
        return float(self.a[self.y] - self.a[self.x])

    def checks(self) -> dict[str, bool]:
        """The three inequalities, evaluated exactly as stated."""
        return {
            "linear_gain": self.gain > 0 and self.gain >= self.c1 * self.distance,
            "energy": self.energy <= 0.5 * abs(self.gain),
            "gradient": self.max_gradient <= 0.1,
        }


def ms_function(g: Graph, x: int, y: int, tolerance: float = DEFAULT_TOL) -> MSFunction:
    """Scale the unit-current potential from ``x`` to ``y`` as far as the
    energy bound (lam <= 1/2) and the gradient cap (1/10 per edge) allow."""
    h = solve_potential(g, x, y, tolerance)
    drops = np.abs(h.edge_drops())
    lam = min(0.5, 0.1 / drops.max())
    a = lam * h.values
    a_drops = np.abs(a[g.edge_v] - a[g.edge_u])
    # guard against the last ulp pushing a drop over the cap
    while a_drops.max() > 0.1:
        lam = np.nextafter(lam, 0.0)
        a = lam * h.values
        a_drops = np.abs(a[g.edge_v] - a[g.edge_u])
    d = int(distances(g, x)[y])
    gain = float(a[y] - a[x])
    c1 = gain / d
    # round down so that gain >= c1 * d holds in floating point too
    while c1 * d > gain:
        c1 = float(np.nextafter(c1, 0.0))
    if not c1 > 0:
        raise RuntimeError(f"non-positive constant c1={c1}")
    energy = float(np.sum(g.edge_mult * a_drops ** 2))
    return MSFunction(g, a, int(x), int(y), float(lam), c1, energy,
                      float(a_drops.max()), d)


def optimize_scaling(h: PotentialField, beta: float) -> tuple[float, float]:
    """Minimise ``-lam*(h(y)-h(x)) + beta*sum mult*(cosh(lam*dh) - 1)`` over
    ``0 < lam <= 1/(10 max|dh|)``. Returns ``(lam_star, exponent)``."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    dh = h.edge_drops()
    mult = h.graph.edge_mult
    gain = h.voltage
    cap = 0.1 / np.abs(dh).max()

    def exponent(lam):
        return -lam * gain + beta * np.sum(mult * (np.cosh(lam * dh) - 1.0))

    def slope(lam):
        return -gain + beta * np.sum(mult * dh * np.sinh(lam * dh))

    # slope is increasing in lam and negative at 0
    lam = cap if slope(cap) <= 0 else brentq(slope, 0.0, cap, xtol=1e-14, rtol=1e-14)
    return float(lam), float(exponent(lam))


class MSFunctionEstimator(BaseEstimator):
    """Estimator wrapper around :func:`ms_function`.

    ``fit(graph, pairs)`` builds one translation function per ``(x, y)`` pair;
    ``transform`` returns rows ``(distance, gain, energy, max_gradient, c1)``.
    """

    def __init__(self, tolerance: float = DEFAULT_TOL):
        self.tolerance = tolerance

    def fit(self, graph: Graph, pairs):
        self.functions_ = [ms_function(graph, x, y, self.tolerance) for x, y in pairs]
        c1 = np.array([f.c1 for f in self.functions_])
        self.c1_spread_ = float((c1.max() - c1.min()) / c1.max())
        return self

    def transform(self, graph=None, pairs=None):
        if not hasattr(self, "functions_"):
            raise AttributeError("call fit first")
        return np.array([[f.distance, f.gain, f.energy, f.max_gradient, f.c1]
                         for f in self.functions_])
