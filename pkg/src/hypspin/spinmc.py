"""Monte Carlo sampling of the O(n) model on finite balls.

The Gibbs weight is ``exp(-beta * H)`` with ``H = -sum_{u~v} mult * <s_u, s_v>``.
Free boundary conditions simulate the ball as given; wired ones contract its
boundary into a single vertex carrying one ordinary spin.

Random streams: replica ``i`` of base seed ``s`` is driven by
``numpy.random.PCG64(splitmix64(s + (i + 1) * 0x9E3779B97F4A7C15 mod 2**64))``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from . import _kernels as K
from .graphs import Graph, contract_boundary, distances, wired_vertex_map

FREE, WIRED, FIXED = "free", "wired", "fixed"
ALGORITHMS = {"metropolis": K.METROPOLIS, "wolff": K.WOLFF, "mixed": K.MIXED}
N_BATCHES = 20

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def replica_seed(base_seed: int, replica: int) -> int:
    return splitmix64((int(base_seed) + (replica + 1) * _GOLDEN) & _MASK64)


def replica_rng(base_seed: int, replica: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(replica_seed(base_seed, replica)))


@dataclass(frozen=True)
class ModelParams:
    n: int
    beta: float
    bc: str = FREE

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"spin dimension n must be an integer >= 1, got {self.n}")
        if not self.beta >= 0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")
        if self.bc not in (FREE, WIRED, FIXED):
            raise ValueError(f"unknown boundary condition {self.bc!r}")


@dataclass(frozen=True)
class McSchedule:
    burn_in: int = 1000
    sweeps: int = 20000
    stride: int = 1
    replicas: int = 4
    seed: int = 0
    algorithm: str = "wolff"
    cold_start: bool = False

    def __post_init__(self):
        for name in ("burn_in", "sweeps", "stride", "replicas"):
            if getattr(self, name) < 1:
                raise ValueError(f"schedule field {name} must be positive")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def measurements(self) -> int:
        return self.sweeps // self.stride


@dataclass
class SpinConfig:
    """Spins as a (V, n) array; Ising spins are +-1 in one column."""
    graph: Graph = field(repr=False)
    spins: np.ndarray

    @classmethod
    def random(cls, graph: Graph, n: int, rng) -> "SpinConfig":
        if n == 1:
            s = rng.choice([-1.0, 1.0], size=(graph.vertex_count, 1))
        else:
            s = rng.standard_normal((graph.vertex_count, n))
            s /= np.linalg.norm(s, axis=1, keepdims=True)
        return cls(graph, s)

    @classmethod
    def aligned(cls, graph: Graph, n: int) -> "SpinConfig":
        s = np.zeros((graph.vertex_count, n))
        s[:, 0] = 1.0
        return cls(graph, s)

    @property
    def n(self) -> int:
        return self.spins.shape[1]

    def max_norm_error(self) -> float:
        return float(np.abs(np.linalg.norm(self.spins, axis=1) - 1.0).max())


def energy(c: SpinConfig) -> float:
    g = c.graph
    dots = np.einsum("ij,ij->i", c.spins[g.edge_u], c.spins[g.edge_v])
    return float(-np.sum(g.edge_mult * dots))


def _csr(g: Graph):
    return g.indptr, g.indices, g.mult.astype(np.float64)


def metropolis_sweep(c: SpinConfig, p: ModelParams, rng, delta: float = 1.0) -> float:
    """One Metropolis proposal per vertex in random order; returns the
    acceptance rate.

    For n >= 2 the proposal rotates the spin by a uniform angle in
    ``[-delta, delta]`` towards a uniformly random tangent direction.
    """
    frozen = np.zeros(c.graph.vertex_count, dtype=np.bool_)
    acc = K.metropolis_sweep(*_csr(c.graph), c.spins, float(p.beta), float(delta),
                             frozen, rng)
    return acc / c.graph.vertex_count


def wolff_step(c: SpinConfig, p: ModelParams, rng) -> int:
    """One Wolff reflection-cluster update; returns the cluster size."""
    V = c.graph.vertex_count
    return int(K.wolff_step(*_csr(c.graph), c.spins, float(p.beta), rng,
                            np.empty(V, dtype=np.int64), np.zeros(V, dtype=np.bool_)))


@dataclass
class CorrelationSeries:
    """Per-distance pair-correlation estimates from ``center``."""
    distance: np.ndarray
    estimate: np.ndarray
    stderr: np.ndarray
    samples: int
    graph_label: str = ""
    params: ModelParams | None = None
    center: int = 0
    schedule: McSchedule | None = None
    algorithm: str = ""

    def __len__(self):
        return len(self.distance)

    def to_csv_rows(self) -> list[str]:
        p = self.params
        n, beta, bc = (p.n, p.beta, p.bc) if p else ("", "", "")
        return [f"{self.graph_label},{n},{_fmt(beta)},{bc},{self.algorithm},{d},"
                f"{_fmt(e)},{_fmt(s)},{self.samples}"
                for d, e, s in zip(self.distance, self.estimate, self.stderr)]


CSV_HEADER = "graph,n,beta,bc,algorithm,distance,estimate,stderr,samples"


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return f"{float(x):.10g}"


def series_csv(series_list) -> str:
    lines = [CSV_HEADER]
    for s in series_list:
        lines += s.to_csv_rows()
    return "\n".join(lines) + "\n"


def read_series_csv(text: str) -> list[dict]:
    lines = text.strip().splitlines()
    if lines[0] != CSV_HEADER:
        raise ValueError("not a correlation CSV")
    keys = CSV_HEADER.split(",")
    rows = []
    for ln in lines[1:]:
        row = dict(zip(keys, ln.split(",")))
        for k in ("n", "distance", "samples"):
            row[k] = int(row[k])
        for k in ("beta", "estimate", "stderr"):
            row[k] = float(row[k])
        rows.append(row)
    return rows


def batch_means(samples: np.ndarray, n_batches: int = N_BATCHES):
    """Mean and batch-means standard error along axis 0."""
    m = len(samples) // n_batches
    if m < 1:
        raise ValueError(f"need at least {n_batches} measurements for batch means")
    batches = samples[: m * n_batches].reshape(n_batches, m, *samples.shape[1:]).mean(axis=1)
    return batches.mean(axis=0), batches.std(axis=0, ddof=1) / math.sqrt(n_batches)


def combine_replicas(means: np.ndarray, errors: np.ndarray):
    """Inverse-variance weighting across replicas (axis 0). Columns with a
    zero error in any replica fall back to the plain mean."""
    means = np.atleast_2d(means)
    errors = np.atleast_2d(errors)
    R = means.shape[0]
    est = means.mean(axis=0)
    err = np.sqrt(np.sum(errors ** 2, axis=0)) / R
    ok = np.all(errors > 0, axis=0)
    if ok.any():
        w = 1.0 / errors[:, ok] ** 2
        est[ok] = np.sum(w * means[:, ok], axis=0) / w.sum(axis=0)
        err[ok] = 1.0 / np.sqrt(w.sum(axis=0))
    return est, err


@dataclass
class ChainResult:
    series: CorrelationSeries
    magnetisation: float
    magnetisation_err: float
    energy: float
    energy_err: float
    deltas: list = field(default_factory=list)


def _probes(g: Graph, center: int, canonical: bool):
    dist = distances(g, center)
    if np.any(dist < 0):
        raise ValueError("graph is not connected")
    D = int(dist.max()) + 1
    if canonical:
        probes = np.array([np.flatnonzero(dist == d)[0] for d in range(D)], dtype=np.int64)
    else:
        probes = np.arange(g.vertex_count, dtype=np.int64)
    bins = dist[probes]
    counts = np.bincount(bins, minlength=D).astype(np.float64)
    return probes, bins, counts


def _simulated_graph(g: Graph, bc: str, center: int):
    """Graph actually simulated and the map from original to simulated ids."""
    if bc == WIRED:
        if center in g.boundary:
            raise ValueError("center lies in the wired boundary")
        return contract_boundary(g), wired_vertex_map(g)
    return g, np.arange(g.vertex_count, dtype=np.int64)


def _run_replicas(worker, replicas: int, threads: int):
    if threads <= 1 or replicas == 1:
        return [worker(i) for i in range(replicas)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, range(replicas)))


def run_chain(g: Graph, p: ModelParams, sched: McSchedule, center: int = 0,
              canonical: bool = False, threads: int = 1) -> ChainResult:
    """Estimate ``<s_center . s_v>`` averaged over each sphere around ``center``.

    Replicas are independent chains; each is burned in from a hot start
    and its measurements are reduced by batch means before combining.
    """
    if sched.measurements < N_BATCHES:
        raise ValueError(f"schedule yields {sched.measurements} measurements; "
                         f"at least {N_BATCHES} are required")
    if not 0 <= center < g.vertex_count:
        raise ValueError(f"center {center} not in graph")
    algo = ALGORITHMS[sched.algorithm]
    if p.bc == FIXED and algo != K.METROPOLIS:
        raise ValueError("fixed boundary spins are only supported with metropolis")
    sim, to_sim = _simulated_graph(g, p.bc, center)
    probes, bins, counts = _probes(g, center, canonical)
    target = to_sim[probes]
    weights = np.bincount(to_sim, minlength=sim.vertex_count).astype(np.float64)
    frozen = np.zeros(sim.vertex_count, dtype=np.bool_)
    if p.bc == FIXED:
        if center in g.boundary:
            raise ValueError("center lies on the fixed boundary")
        frozen[list(g.boundary)] = True
    csr = _csr(sim)

    def worker(i):
        rng = replica_rng(sched.seed, i)
        if sched.cold_start:
            c = SpinConfig.aligned(sim, p.n)
        else:
            c = SpinConfig.random(sim, p.n, rng)
        c.spins[frozen] = 0.0
        c.spins[frozen, 0] = 1.0
        corr, mags, ens, delta = K.run_chain(
            algo, *csr, c.spins, float(p.beta), 1.0, frozen, rng, sched.burn_in,
            sched.measurements, sched.stride, int(to_sim[center]), target, bins,
            counts, weights)
        return batch_means(corr), batch_means(mags), batch_means(ens), delta

    results = _run_replicas(worker, sched.replicas, threads)
    corr_m = np.array([r[0][0] for r in results])
    corr_e = np.array([r[0][1] for r in results])
    est, err = combine_replicas(corr_m, corr_e)
    mag, mag_err = combine_replicas(np.array([[r[1][0]] for r in results]),
                                    np.array([[r[1][1]] for r in results]))
    en, en_err = combine_replicas(np.array([[r[2][0]] for r in results]),
                                  np.array([[r[2][1]] for r in results]))
    series = CorrelationSeries(
        distance=np.arange(len(counts)), estimate=est, stderr=err,
        samples=sched.measurements * sched.replicas, graph_label=g.label, params=p,
        center=int(center), schedule=sched, algorithm=sched.algorithm)
    return ChainResult(series, float(mag[0]), float(mag_err[0]), float(en[0]),
                       float(en_err[0]), [r[3] for r in results])


def fk_connectivity(g: Graph, beta: float, sched: McSchedule, center: int = 0,
                    bc: str = FREE, n: int = 1, threads: int = 1) -> CorrelationSeries:
    """``P[center <-> v]`` in the FK clusters of a Swendsen-Wang chain,
    averaged over spheres. Equal in law to the Ising pair correlation."""
    if n != 1:
        raise ValueError("the FK coupling is implemented for Ising spins (n=1) only")
    p = ModelParams(1, beta, bc)
    if sched.measurements < N_BATCHES:
        raise ValueError("too few measurements for batch means")
    sim, to_sim = _simulated_graph(g, bc, center)
    probes, bins, counts = _probes(g, center, False)
    target = to_sim[probes]
    eu, ev, em = sim.edge_u, sim.edge_v, sim.edge_mult.astype(np.float64)

    def worker(i):
        rng = replica_rng(sched.seed, i)
        c = SpinConfig.random(sim, 1, rng)
        conn, _ = K.run_fk(eu, ev, em, c.spins, float(beta), rng, sched.burn_in,
                           sched.measurements, sched.stride, int(to_sim[center]),
                           target, bins, counts)
        return batch_means(conn)

    results = _run_replicas(worker, sched.replicas, threads)
    est, err = combine_replicas(np.array([r[0] for r in results]),
                                np.array([r[1] for r in results]))
    return CorrelationSeries(np.arange(len(counts)), est, err,
                             sched.measurements * sched.replicas, g.label, p,
                             int(center), sched, "swendsen-wang")


def fk_edge_probability(p: float) -> float:
    """Bernoulli parameter ``p`` mapped to ``2p / (1 + p)``."""
    return 2.0 * p / (1.0 + p)


def fk_beta(p_fk: float) -> float:
    """Ising inverse temperature whose FK bond probability is ``p_fk``:
    ``1 - exp(-2 beta) = p_fk``."""
    return -0.5 * math.log1p(-p_fk)


def bernoulli_connectivity(g: Graph, prob: float, samples: int, center: int = 0,
                           rng=None) -> CorrelationSeries:
    """Monte Carlo ``P[center <-> v]`` for i.i.d. bond percolation, by distance.

    An edge of multiplicity m is open with probability ``1 - (1 - prob)**m``.
    """
    if not 0.0 <= prob <= 1.0:
        raise ValueError("prob must lie in [0, 1]")
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = np.random.default_rng(rng)
    probes, bins, counts = _probes(g, center, False)
    conn = K.run_bernoulli(g.edge_u, g.edge_v, g.edge_mult.astype(np.float64),
                           float(prob), rng, int(samples), g.vertex_count,
                           int(center), probes, bins, counts)
    est = conn.mean(axis=0)
    err = conn.std(axis=0, ddof=1) / math.sqrt(samples) if samples > 1 else \
        np.zeros_like(est)
    return CorrelationSeries(np.arange(len(counts)), est, err, int(samples), g.label,
                             None, int(center), None, "bernoulli")


def ising_state_histogram(g: Graph, beta: float, steps: int, rng, algorithm: str,
                          thin: int = 1) -> np.ndarray:
    """Visit counts over all 2^V Ising states (bit v set when s_v = +1)."""
    if g.vertex_count > 20:
        raise ValueError("state histogram limited to 20 vertices")
    code = {"swendsen-wang": K.SWENDSEN_WANG, **ALGORITHMS}[algorithm]
    c = SpinConfig.random(g, 1, rng)
    return K.ising_state_histogram(code, *_csr(g), g.edge_u, g.edge_v,
                                   g.edge_mult.astype(np.float64), c.spins,
                                   float(beta), rng, int(steps), int(thin))


class PairCorrelationEstimator(BaseEstimator):
    """Estimator interface over :func:`run_chain`.

    ``fit(graph)`` runs the chain; fitted attributes are ``series_``,
    ``magnetisation_`` and ``energy_``. ``transform`` returns the
    ``(distance, estimate, stderr)`` table.
    """

    def __init__(self, n=1, beta=1.0, bc=FREE, algorithm="wolff", burn_in=1000,
                 sweeps=20000, stride=1, replicas=4, seed=0, center=0,
                 canonical=False, threads=1):
        self.n = n
        self.beta = beta
        self.bc = bc
        self.algorithm = algorithm
        self.burn_in = burn_in
        self.sweeps = sweeps
        self.stride = stride
        self.replicas = replicas
        self.seed = seed
        self.center = center
        self.canonical = canonical
        self.threads = threads

    def fit(self, graph: Graph, y=None):
        params = ModelParams(self.n, self.beta, self.bc)
        sched = McSchedule(self.burn_in, self.sweeps, self.stride, self.replicas,
                           self.seed, self.algorithm)
        res = run_chain(graph, params, sched, self.center, self.canonical, self.threads)
        self.series_ = res.series
        self.magnetisation_ = res.magnetisation
        self.energy_ = res.energy
        return self

    def transform(self, graph=None):
        if not hasattr(self, "series_"):
            raise AttributeError("PairCorrelationEstimator is not fitted; call fit first")
        s = self.series_
        return np.column_stack([s.distance, s.estimate, s.stderr])
