"""Finite graphs quasi-isometric to the hyperbolic plane, plus contrast graphs.

Every graph is a finite, connected, undirected multigraph stored in CSR form.
Vertex 0 is the root; ``ring[v]`` is the BFS distance from the root and the
boundary is the outermost ring.
"""
from __future__ import annotations

from collections import deque
from typing import Iterable

import numpy as np

UNREACHABLE = -1


class Graph:
    """Immutable undirected multigraph with ring labels and a boundary set.

    Parameters
    ----------
    vertex_count : int
    edges : iterable of (u, v, mult)
        Undirected edges; parallel entries for the same pair are summed.
    label : str
    ring : array-like, optional
        Per-vertex ring label. Recomputed by BFS from vertex 0 when omitted.
    boundary : iterable of int, optional
        Defaults to the vertices of maximal ring.
    """

    def __init__(self, vertex_count: int, edges: Iterable[tuple[int, int, int]],
                 label: str = "graph", ring=None, boundary=None):
        if vertex_count < 1:
            raise ValueError("a graph needs at least one vertex")
        weights: dict[tuple[int, int], int] = {}
        for u, v, m in edges:
            u, v, m = int(u), int(v), int(m)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < vertex_count and 0 <= v < vertex_count):
                raise ValueError(f"edge ({u}, {v}) out of range")
            if m < 1:
                raise ValueError("edge multiplicity must be positive")
            key = (u, v) if u < v else (v, u)
            weights[key] = weights.get(key, 0) + m

        keys = sorted(weights)
        self.vertex_count = int(vertex_count)
        self.label = label
        self.edge_u = np.array([k[0] for k in keys], dtype=np.int64)
        self.edge_v = np.array([k[1] for k in keys], dtype=np.int64)
        self.edge_mult = np.array([weights[k] for k in keys], dtype=np.int64)

        # CSR adjacency, neighbours sorted by id
        src = np.concatenate([self.edge_u, self.edge_v])
        dst = np.concatenate([self.edge_v, self.edge_u])
        mult = np.concatenate([self.edge_mult, self.edge_mult])
        order = np.lexsort((dst, src))
        self.indices = dst[order]
        self.mult = mult[order]
        self.indptr = np.zeros(vertex_count + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=vertex_count), out=self.indptr[1:])

        if ring is None:
            ring = bfs_distances(self.indptr, self.indices, 0)
        self.ring = np.asarray(ring, dtype=np.int64)
        if boundary is None:
            boundary = np.flatnonzero(self.ring == self.ring.max())
        self.boundary = frozenset(int(b) for b in boundary)
        for arr in (self.edge_u, self.edge_v, self.edge_mult,
                    self.indices, self.mult, self.indptr, self.ring):
            arr.flags.writeable = False

    @property
    def edge_count(self) -> int:
        """Number of distinct vertex pairs joined by at least one edge."""
        return len(self.edge_u)

    @property
    def total_multiplicity(self) -> int:
        return int(self.edge_mult.sum())

    @property
    def max_ring(self) -> int:
        return int(self.ring.max())

    def neighbors(self, v: int) -> list[tuple[int, int]]:
        """Ordered ``(neighbour, multiplicity)`` pairs of ``v``."""
        lo, hi = self.indptr[v], self.indptr[v + 1]
        return [(int(w), int(m)) for w, m in zip(self.indices[lo:hi], self.mult[lo:hi])]

    def degree(self, v: int | None = None):
        """Degree counted with multiplicity; all degrees when ``v`` is None."""
        deg = np.bincount(np.concatenate([self.edge_u, self.edge_v]),
                          weights=np.concatenate([self.edge_mult, self.edge_mult]),
                          minlength=self.vertex_count).astype(np.int64)
        return deg if v is None else int(deg[v])

    def edges(self) -> list[tuple[int, int, int]]:
        return list(zip(self.edge_u.tolist(), self.edge_v.tolist(), self.edge_mult.tolist()))

    def dump(self) -> str:
        """Plain-text edge list, used by golden tests."""
        lines = [f"vertices={self.vertex_count} label={self.label}"]
        lines += [f"{u} {v} {m}" for u, v, m in self.edges()]
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, text: str) -> "Graph":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = dict(tok.split("=", 1) for tok in lines[0].split())
        edges = [tuple(int(t) for t in ln.split()) for ln in lines[1:]]
        return cls(int(head["vertices"]), edges, label=head.get("label", "graph"))

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.vertex_count == other.vertex_count
                and np.array_equal(self.edge_u, other.edge_u)
                and np.array_equal(self.edge_v, other.edge_v)
                and np.array_equal(self.edge_mult, other.edge_mult))

    __hash__ = None

    def __repr__(self):
        return (f"Graph(label={self.label!r}, vertices={self.vertex_count}, "
                f"edges={self.edge_count}, max_ring={self.max_ring})")


def bfs_distances(indptr, indices, source: int) -> np.ndarray:
    n = len(indptr) - 1
    dist = np.full(n, UNREACHABLE, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in indices[indptr[v]:indptr[v + 1]]:
            if dist[w] == UNREACHABLE:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def _check_vertex(g: Graph, v) -> int:
    if not (0 <= int(v) < g.vertex_count):
        raise ValueError(f"vertex {v} not in graph with {g.vertex_count} vertices")
    return int(v)


def distances(g: Graph, source: int) -> np.ndarray:
    """BFS distances from ``source``; unreachable vertices get ``UNREACHABLE``."""
    return bfs_distances(g.indptr, g.indices, _check_vertex(g, source))


def sphere_sizes(g: Graph, source: int) -> list[int]:
    dist = distances(g, source)
    return np.bincount(dist[dist >= 0]).tolist()


def build_triangulation(q: int, radius: int) -> Graph:
    """Radius-``radius`` ball of the {3,q} triangulation, built ring by ring.

    Ring k is a cycle listed in cyclic order. Consecutive ring-k vertices share
    one child; each vertex spawns just enough further children to reach degree
    ``q`` once ring k+1 is closed into a cycle. Ids are ring-major.
    """
    if q < 7:
        raise ValueError(f"q={q}: {{3,q}} is hyperbolic only for q >= 7")
    if radius < 0:
        raise ValueError("radius must be non-negative")

    edges: list[tuple[int, int, int]] = []
    ring_of = [0]
    degree = [0]
    if radius == 0:
        return Graph(1, edges, label=f"tri{q}r0", ring=ring_of)

    def add_edge(u, v):
        edges.append((u, v, 1))
        degree[u] += 1
        degree[v] += 1

    def new_vertex(k):
        ring_of.append(k)
        degree.append(0)
        return len(ring_of) - 1

    current = [new_vertex(1) for _ in range(q)]
    for v in current:
        add_edge(0, v)
    for k in range(1, radius + 1):
        # close ring k into a cycle
        m = len(current)
        for i in range(m):
            add_edge(current[i], current[(i + 1) % m])
        if k == radius:
            break
        nxt: list[int] = []
        spawned = []
        for v in current:
            # first child is shared with the predecessor and created by it
            own = q - degree[v] - 1
            if own < 1:
                raise RuntimeError("layered construction needs q >= 7")
            kids = [new_vertex(k + 1) for _ in range(own)]
            nxt.extend(kids)
            spawned.append(kids)
        for i, v in enumerate(current):
            add_edge(v, spawned[i - 1][-1])
            for c in spawned[i]:
                add_edge(v, c)
        current = nxt
    return Graph(len(ring_of), edges, label=f"tri{q}r{radius}", ring=ring_of)


def build_ringed_tree(depth: int, cycle: bool = False) -> Graph:
    """Binary tree whose generations are also joined left to right.

    ``cycle=True`` closes each generation of size > 2 into a cycle instead of
    a path.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    n = 2 ** (depth + 1) - 1
    edges = [((v - 1) // 2, v, 1) for v in range(1, n)]
    for k in range(1, depth + 1):
        lo, hi = 2 ** k - 1, 2 ** (k + 1) - 1
        edges += [(v, v + 1, 1) for v in range(lo, hi - 1)]
        if cycle and hi - lo > 2:
            edges.append((lo, hi - 1, 1))
    label = f"ringedtree{'c' if cycle else ''}d{depth}"
    return Graph(n, edges, label=label)


def build_reference(kind: str, *sizes: int) -> Graph:
    """Oracle and contrast graphs.

    ``path n`` (n edges), ``cycle n``, ``tree b depth``, ``grid L``,
    ``complete m``.
    """
    if any(int(s) < 1 for s in sizes):
        if not (kind == "tree" and len(sizes) == 2 and sizes[0] >= 1 and sizes[1] >= 0):
            raise ValueError(f"sizes must be positive, got {sizes}")
    if kind == "path":
        (n,) = sizes
        return Graph(n + 1, [(i, i + 1, 1) for i in range(n)], label=f"path{n}")
    if kind == "cycle":
        (n,) = sizes
        if n < 3:
            raise ValueError("a simple cycle needs at least 3 vertices")
        return Graph(n, [(i, (i + 1) % n, 1) for i in range(n)], label=f"cycle{n}")
    if kind == "tree":
        b, depth = sizes
        count = sum(b ** k for k in range(depth + 1))
        return Graph(count, [((v - 1) // b, v, 1) for v in range(1, count)],
                     label=f"tree{b}d{depth}")
    if kind == "grid":
        (L,) = sizes
        edges = []
        for r in range(L):
            for c in range(L):
                v = r * L + c
                if c + 1 < L:
                    edges.append((v, v + 1, 1))
                if r + 1 < L:
                    edges.append((v, v + L, 1))
        return Graph(L * L, edges, label=f"grid{L}")
    if kind == "complete":
        (m,) = sizes
        return Graph(m, [(i, j, 1) for i in range(m) for j in range(i + 1, m)],
                     label=f"complete{m}")
    raise ValueError(f"unknown reference graph kind {kind!r}")


def ball(g: Graph, center: int, r: int) -> Graph:
    """Induced subgraph on the vertices within distance ``r`` of ``center``.

    Vertices are renumbered densely in (distance, old id) order, so the center
    becomes vertex 0 and ids stay ring-major.
    """
    if r < 0:
        raise ValueError("radius must be non-negative")
    dist = distances(g, center)
    keep = np.flatnonzero((dist >= 0) & (dist <= r))
    keep = keep[np.lexsort((keep, dist[keep]))]
    new_id = np.full(g.vertex_count, -1, dtype=np.int64)
    new_id[keep] = np.arange(len(keep))
    mask = (new_id[g.edge_u] >= 0) & (new_id[g.edge_v] >= 0)
    edges = zip(new_id[g.edge_u[mask]], new_id[g.edge_v[mask]], g.edge_mult[mask])
    return Graph(len(keep), edges, label=f"{g.label}-ball{r}", ring=dist[keep])


def contract_boundary(g: Graph) -> Graph:
    """Wire the boundary: merge all boundary vertices into one new last vertex.

    Non-boundary vertices keep their relative order (for ring-major graphs
    their ids are unchanged). Edges inside the boundary are dropped and
    parallel edges into the boundary are merged with summed multiplicity.
    """
    if not g.boundary:
        raise ValueError("cannot contract an empty boundary")
    is_b = np.zeros(g.vertex_count, dtype=bool)
    is_b[list(g.boundary)] = True
    inner = np.flatnonzero(~is_b)
    wired = len(inner)
    new_id = np.full(g.vertex_count, wired, dtype=np.int64)
    new_id[inner] = np.arange(wired)
    mask = ~(is_b[g.edge_u] & is_b[g.edge_v])
    edges = zip(new_id[g.edge_u[mask]], new_id[g.edge_v[mask]], g.edge_mult[mask])
    ring = np.append(g.ring[inner], g.ring.max())
    return Graph(wired + 1, edges, label=f"{g.label}-wired", ring=ring, boundary=[wired])


def wired_vertex_map(g: Graph) -> np.ndarray:
    """Where each vertex of ``g`` lands in ``contract_boundary(g)``."""
    is_b = np.zeros(g.vertex_count, dtype=bool)
    is_b[list(g.boundary)] = True
    out = np.full(g.vertex_count, int((~is_b).sum()), dtype=np.int64)
    out[~is_b] = np.arange(int((~is_b).sum()))
    return out

