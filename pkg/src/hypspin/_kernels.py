"""Compiled Monte Carlo kernels.

Spins are stored as a (V, n) float array for every n; Ising spins are
+-1.0 in a single column. Graphs arrive as CSR triples (indptr, indices, mult).
"""
import numpy as np
from numba import njit

METROPOLIS, WOLFF, MIXED, SWENDSEN_WANG = 0, 1, 2, 3


@njit(cache=True, nogil=True)
def local_field(indptr, indices, mult, spins, v, out):
    out[:] = 0.0
    for k in range(indptr[v], indptr[v + 1]):
        w = indices[k]
        out += mult[k] * spins[w]


@njit(cache=True, nogil=True)
def energy(indptr, indices, mult, spins):
    e = 0.0
    for v in range(len(indptr) - 1):
        for k in range(indptr[v], indptr[v + 1]):
            w = indices[k]
            if w > v:
                e -= mult[k] * np.dot(spins[v], spins[w])
    return e


@njit(cache=True, nogil=True)
def random_unit(rng, n, out):
    if n == 1:
        out[0] = 1.0 if rng.random() < 0.5 else -1.0
        return
    norm = 0.0
    while norm < 1e-12:
        for i in range(n):
            out[i] = rng.standard_normal()
        norm = np.sqrt(np.dot(out, out))
    out /= norm


@njit(cache=True, nogil=True)
def metropolis_sweep(indptr, indices, mult, spins, beta, delta, frozen, rng):
    """One proposal per vertex, visiting vertices in a fresh uniformly random
    order; returns the number accepted.

    A fixed visiting order is not irreducible: on a triangle, zero-cost flips
    are always accepted and two states form a closed deterministic cycle.
    """
    V, n = spins.shape
    h = np.empty(n)
    t = np.empty(n)
    new = np.empty(n)
    order = np.arange(V)
    for i in range(V - 1, 0, -1):
        j = rng.integers(0, i + 1)
        order[i], order[j] = order[j], order[i]
    accepted = 0
    for v in order:
        if frozen[v]:
            continue
        local_field(indptr, indices, mult, spins, v, h)
        if n == 1:
            new[0] = -spins[v, 0]
        else:
            # random tangent direction, then rotate by phi in [-delta, delta]
            random_unit(rng, n, t)
            t -= np.dot(t, spins[v]) * spins[v]
            tn = np.sqrt(np.dot(t, t))
            while tn < 1e-12:
                random_unit(rng, n, t)
                t -= np.dot(t, spins[v]) * spins[v]
                tn = np.sqrt(np.dot(t, t))
            t /= tn
            phi = delta * (2.0 * rng.random() - 1.0)
            new[:] = np.cos(phi) * spins[v] + np.sin(phi) * t
            new /= np.sqrt(np.dot(new, new))
        dH = -np.dot(new - spins[v], h)
        if dH <= 0.0 or rng.random() < np.exp(-beta * dH):
            spins[v] = new
            accepted += 1
    return accepted


@njit(cache=True, nogil=True)
def wolff_step(indptr, indices, mult, spins, beta, rng, stack, mark):
    """Grow one reflection cluster from a uniform seed and flip it.

    Edge (u, w) joins with probability 1 - exp(-2 beta mult (r.s_u)(r.s_w)),
    clipped at 0. ``mark`` must be all False on entry and is left so.
    Returns the cluster size.
    """
    V, n = spins.shape
    r = np.empty(n)
    random_unit(rng, n, r)
    seed = rng.integers(0, V)
    proj = np.dot(r, spins[seed])
    spins[seed] -= 2.0 * proj * r
    mark[seed] = True
    stack[0] = seed
    size = 1
    head = 0
    # stack doubles as a FIFO queue and, afterwards, the member list
    while head < size:
        u = stack[head]
        head += 1
        # spins[u] is already reflected; use its pre-flip projection
        pu = -np.dot(r, spins[u])
        for k in range(indptr[u], indptr[u + 1]):
            w = indices[k]
            if mark[w]:
                continue
            x = 2.0 * beta * mult[k] * pu * np.dot(r, spins[w])
            if x <= 0.0:
                continue
            if rng.random() < 1.0 - np.exp(-x):
                mark[w] = True
                pw = np.dot(r, spins[w])
                spins[w] -= 2.0 * pw * r
                stack[size] = w
                size += 1
    for i in range(size):
        mark[stack[i]] = False
    return size


@njit(cache=True, nogil=True)
def find(parent, a):
    root = a
    while parent[root] != root:
        root = parent[root]
    while parent[a] != root:
        nxt = parent[a]
        parent[a] = root
        a = nxt
    return root


@njit(cache=True, nogil=True)
def union(parent, rank, a, b):
    ra, rb = find(parent, a), find(parent, b)
    if ra == rb:
        return
    if rank[ra] < rank[rb]:
        ra, rb = rb, ra
    parent[rb] = ra
    if rank[ra] == rank[rb]:
        rank[ra] += 1


@njit(cache=True, nogil=True)
def swendsen_wang_step(edge_u, edge_v, edge_mult, spins, beta, rng, parent, rank, color):
    """One Swendsen-Wang update for Ising spins. Leaves ``parent`` describing
    the FK bond clusters that were used."""
    V = spins.shape[0]
    for v in range(V):
        parent[v] = v
        rank[v] = 0
    for e in range(len(edge_u)):
        u, w = edge_u[e], edge_v[e]
        if spins[u, 0] == spins[w, 0]:
            if rng.random() < 1.0 - np.exp(-2.0 * beta * edge_mult[e]):
                union(parent, rank, u, w)
    for v in range(V):
        color[v] = 0.0
    for v in range(V):
        root = find(parent, v)
        if color[root] == 0.0:
            color[root] = 1.0 if rng.random() < 0.5 else -1.0
        spins[v, 0] = color[root]


@njit(cache=True, nogil=True)
def bernoulli_clusters(edge_u, edge_v, edge_mult, prob, rng, parent, rank):
    V = len(parent)
    for v in range(V):
        parent[v] = v
        rank[v] = 0
    for e in range(len(edge_u)):
        p_open = 1.0 - (1.0 - prob) ** edge_mult[e]
        if rng.random() < p_open:
            union(parent, rank, edge_u[e], edge_v[e])
    for v in range(V):
        find(parent, v)


@njit(cache=True, nogil=True)
def sweep(algorithm, indptr, indices, mult, spins, beta, delta, frozen, rng, stack, mark,
          wolff_steps=1):
    """One sweep. Returns (accepted metropolis moves, wolff cluster volume).

    A Wolff sweep is a fixed number ``wolff_steps`` of cluster flips. The
    count must not depend on the clusters drawn: stopping once the flipped
    volume reaches V is a state-dependent stopping rule and biases the
    chain (on a single edge it always stops in an aligned state).
    """
    acc = 0
    vol = 0
    if algorithm == METROPOLIS or algorithm == MIXED:
        acc = metropolis_sweep(indptr, indices, mult, spins, beta, delta, frozen, rng)
    if algorithm == MIXED:
        vol = wolff_step(indptr, indices, mult, spins, beta, rng, stack, mark)
    elif algorithm == WOLFF:
        for _ in range(wolff_steps):
            vol += wolff_step(indptr, indices, mult, spins, beta, rng, stack, mark)
    return acc, vol


@njit(cache=True, nogil=True)
def measure(spins, center, target, dist, counts, out):
    """Average of s_center . s_target[k] over probes k, binned by dist[k]."""
    out[:] = 0.0
    sc = spins[center]
    for v in range(len(target)):
        out[dist[v]] += np.dot(sc, spins[target[v]])
    for d in range(len(out)):
        out[d] /= counts[d]


@njit(cache=True, nogil=True)
def run_chain(algorithm, indptr, indices, mult, spins, beta, delta, frozen, rng,
              burn_in, n_measure, stride, center, target, dist, counts, weights):
    """Burn in (adapting delta towards 50% acceptance), then measure.

    ``weights[v]`` is how many original vertices share simulated vertex v;
    magnetisation is taken over the original vertices.
    Returns (correlations[n_measure, D+1], |m|[n_measure], H[n_measure], delta).
    """
    V, n = spins.shape
    stack = np.empty(V, dtype=np.int64)
    mark = np.zeros(V, dtype=np.bool_)
    free_count = 0
    for v in range(V):
        if not frozen[v]:
            free_count += 1
    # Wolff: the first half of burn-in uses single flips, the second quarter
    # of which measures the mean cluster size; afterwards a sweep is the
    # fixed number of flips whose expected volume is V.
    wolff_steps = 1
    pilot = burn_in // 2
    pilot_vol = 0
    for i in range(burn_in):
        if algorithm == WOLFF and i == pilot and pilot > 0:
            counted = pilot - pilot // 2
            wolff_steps = max(1, int(np.ceil(V * counted / max(pilot_vol, 1))))
        acc, vol = sweep(algorithm, indptr, indices, mult, spins, beta, delta, frozen,
                         rng, stack, mark, wolff_steps)
        if pilot // 2 <= i < pilot:
            pilot_vol += vol
        if n > 1 and algorithm != WOLFF and free_count > 0:
            rate = acc / free_count
            delta *= np.exp(rate - 0.5)
            if delta > np.pi:
                delta = np.pi
            if delta < 1e-3:
                delta = 1e-3
    D = len(counts)
    corr = np.empty((n_measure, D))
    mags = np.empty(n_measure)
    ens = np.empty(n_measure)
    row = np.empty(D)
    total = np.zeros(n)
    norm_w = weights.sum()
    for i in range(n_measure):
        for k in range(stride):
            sweep(algorithm, indptr, indices, mult, spins, beta, delta, frozen,
                  rng, stack, mark, wolff_steps)
        if n > 1:
            for v in range(V):
                spins[v] /= np.sqrt(np.dot(spins[v], spins[v]))
        measure(spins, center, target, dist, counts, row)
        corr[i] = row
        total[:] = 0.0
        for v in range(V):
            total += weights[v] * spins[v]
        mags[i] = np.sqrt(np.dot(total, total)) / norm_w
        ens[i] = energy(indptr, indices, mult, spins)
    return corr, mags, ens, delta


@njit(cache=True, nogil=True)
def run_fk(edge_u, edge_v, edge_mult, spins, beta, rng, burn_in, n_measure, stride,
           center, target, dist, counts):
    """Swendsen-Wang chain; records probe-averaged P[center <-> target[k]]
    and the matching spin correlation."""
    V = spins.shape[0]
    parent = np.empty(V, dtype=np.int64)
    rank = np.empty(V, dtype=np.int64)
    color = np.empty(V)
    for i in range(burn_in):
        swendsen_wang_step(edge_u, edge_v, edge_mult, spins, beta, rng, parent, rank, color)
    D = len(counts)
    conn = np.zeros((n_measure, D))
    spin_corr = np.zeros((n_measure, D))
    for i in range(n_measure):
        for k in range(stride):
            swendsen_wang_step(edge_u, edge_v, edge_mult, spins, beta, rng,
                               parent, rank, color)
        rc = find(parent, center)
        for k in range(len(target)):
            v = target[k]
            if find(parent, v) == rc:
                conn[i, dist[k]] += 1.0
            spin_corr[i, dist[k]] += spins[center, 0] * spins[v, 0]
        for d in range(D):
            conn[i, d] /= counts[d]
            spin_corr[i, d] /= counts[d]
    return conn, spin_corr


@njit(cache=True, nogil=True)
def run_bernoulli(edge_u, edge_v, edge_mult, prob, rng, samples, n_vertices,
                  center, target, dist, counts):
    parent = np.empty(n_vertices, dtype=np.int64)
    rank = np.empty(n_vertices, dtype=np.int64)
    D = len(counts)
    conn = np.zeros((samples, D))
    for i in range(samples):
        bernoulli_clusters(edge_u, edge_v, edge_mult, prob, rng, parent, rank)
        rc = parent[center]
        for k in range(len(target)):
            if parent[target[k]] == rc:
                conn[i, dist[k]] += 1.0
        for d in range(D):
            conn[i, d] /= counts[d]
    return conn


@njit(cache=True, nogil=True)
def ising_state_histogram(algorithm, indptr, indices, mult, edge_u, edge_v, edge_mult,
                          spins, beta, rng, steps, thin):
    """Visit counts over the 2^V Ising states (bit v set when s_v = +1),
    recording every ``thin``-th step."""
    V = spins.shape[0]
    hist = np.zeros(2 ** V, dtype=np.int64)
    stack = np.empty(V, dtype=np.int64)
    mark = np.zeros(V, dtype=np.bool_)
    frozen = np.zeros(V, dtype=np.bool_)
    parent = np.empty(V, dtype=np.int64)
    rank = np.empty(V, dtype=np.int64)
    color = np.empty(V)
    for i in range(steps):
        if algorithm == SWENDSEN_WANG:
            swendsen_wang_step(edge_u, edge_v, edge_mult, spins, beta, rng, parent, rank, color)
        elif algorithm == WOLFF:
            wolff_step(indptr, indices, mult, spins, beta, rng, stack, mark)
        else:
            sweep(algorithm, indptr, indices, mult, spins, beta, 0.0, frozen, rng, stack, mark)
        if i % thin == 0:
            state = 0
            for v in range(V):
                if spins[v, 0] > 0:
                    state |= 1 << v
            hist[state] += 1
    return hist
