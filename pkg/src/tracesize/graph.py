"""Ground-truth graphs: construction, loading and validation.

Graphs are stored as immutable CSR arrays (``indptr``, ``indices``) with
dense 0-based vertex ids and sorted neighbour lists. Generators and the
edge-list loader always return the largest connected component, so the
reported vertex count is the retained size.
"""
from __future__ import annotations

import hashlib
import logging
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from tracesize import _seeding
from tracesize._kernels import bfs_distances

log = logging.getLogger(__name__)


class GraphError(ValueError):
    """Invalid graph input or generator parameters."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.int64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph in CSR form.

    ``labels`` optionally maps each vertex back to the id it carried in the
    input it was extracted from (an edge-list file or a parent graph).
    """

    indptr: np.ndarray
    indices: np.ndarray
    labels: np.ndarray | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "indptr", _readonly(self.indptr))
        object.__setattr__(self, "indices", _readonly(self.indices))
        if self.labels is not None:
            object.__setattr__(self, "labels", _readonly(self.labels))
        if self.indptr.ndim != 1 or self.indptr.size < 1 or self.indptr[0] != 0:
            raise GraphError("malformed indptr")
        if self.indptr[-1] != self.indices.size or self.indices.size % 2:
            raise GraphError("adjacency arrays are inconsistent")

    @classmethod
    def from_edges(cls, num_vertices: int, edges, labels=None) -> "Graph":
        """Build from an ``(k, 2)`` array of vertex pairs.

        Duplicate edges (in either orientation) and self-loops are dropped.
        """
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= num_vertices):
            raise GraphError("edge endpoint out of range")
        u, v = edges[:, 0], edges[:, 1]
        keep = u != v
        lo = np.minimum(u[keep], v[keep])
        hi = np.maximum(u[keep], v[keep])
        key = np.unique(lo * num_vertices + hi)
        lo, hi = key // num_vertices, key % num_vertices
        rows = np.concatenate([lo, hi])
        cols = np.concatenate([hi, lo])
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        indptr = np.zeros(num_vertices + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=num_vertices), out=indptr[1:])
        return cls(indptr, cols, labels)

    @property
    def num_vertices(self) -> int:
        return self.indptr.size - 1

    @property
    def num_edges(self) -> int:
        return self.indices.size // 2

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @property
    def adjacency(self) -> list[list[int]]:
        return [self.neighbors(v).tolist() for v in range(self.num_vertices)]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @cached_property
    def rows(self) -> np.ndarray:
        """Row (owning vertex) of every entry of ``indices``."""
        return _readonly(np.repeat(np.arange(self.num_vertices), self.degrees()))

    def edges(self) -> np.ndarray:
        """Each undirected edge once, as rows ``(u, v)`` with ``u < v``."""
        mask = self.rows < self.indices
        return np.column_stack([self.rows[mask], self.indices[mask]])

    def to_scipy(self) -> sparse.csr_matrix:
        n = self.num_vertices
        data = np.ones(self.indices.size, dtype=np.int8)
        return sparse.csr_matrix((data, self.indices, self.indptr), shape=(n, n))

    def distances_from(self, source: int) -> np.ndarray:
        return bfs_distances(self.indptr, self.indices, int(source))

    def is_connected(self) -> bool:
        if self.num_vertices == 0:
            return False
        return bool((self.distances_from(0) >= 0).all())

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.indptr.tobytes())
        h.update(self.indices.tobytes())
        return h.hexdigest()[:16]

    def validate(self) -> None:
        """Check the undirected simple-graph invariants; raise GraphError."""
        n = self.num_vertices
        rows = self.rows
        if (rows == self.indices).any():
            raise GraphError("self-loop present")
        for v in range(n):
            nb = self.neighbors(v)
            if nb.size > 1 and (np.diff(nb) <= 0).any():
                raise GraphError(f"neighbour list of {v} not strictly sorted")
        fwd = np.sort(rows * n + self.indices)
        bwd = np.sort(self.indices * n + rows)
        if not np.array_equal(fwd, bwd):
            raise GraphError("adjacency is not symmetric")


def giant_component(edges, num_vertices: int | None = None) -> Graph:
    """Largest connected component of a raw edge set.

    ``edges`` holds pairs of non-negative original ids. When
    ``num_vertices`` is given, ids ``0..num_vertices-1`` all count as
    vertices (isolated ones form singleton components). Ties in component
    size go to the component holding the smallest original id. Retained
    vertices are relabelled ``0..N-1`` in increasing original-id order and
    the original ids are kept as ``labels``.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if num_vertices is None:
        if edges.size == 0:
            raise GraphError("empty edge set")
        ids = np.unique(edges)
    else:
        if num_vertices < 1:
            raise GraphError("empty vertex set")
        ids = np.arange(num_vertices)
    if ids.size and ids[0] < 0:
        raise GraphError("negative vertex id")
    local = np.searchsorted(ids, edges)
    n = ids.size
    adj = sparse.coo_matrix(
        (np.ones(len(local), dtype=np.int8), (local[:, 0], local[:, 1])), shape=(n, n)
    )
    _, comp = csgraph.connected_components(adj, directed=False)
    sizes = np.bincount(comp)
    best = sizes.max()
    # ids are sorted, so the first vertex of a winning component is its minimum
    winner = comp[np.flatnonzero(sizes[comp] == best)[0]]
    keep = comp == winner
    new_id = np.full(n, -1, dtype=np.int64)
    new_id[keep] = np.arange(int(keep.sum()))
    mask = keep[local[:, 0]]
    sub = new_id[local[mask]]
    return Graph.from_edges(int(keep.sum()), sub, labels=ids[keep])


def _decode_pairs(k: np.ndarray) -> np.ndarray:
    # index k over the strict lower triangle, ordered (1,0), (2,0), (2,1), (3,0), ...
    i = np.floor((1.0 + np.sqrt(1.0 + 8.0 * k.astype(np.float64))) / 2.0).astype(np.int64)
    i -= (i * (i - 1) // 2) > k
    i += ((i + 1) * i // 2) <= k
    j = k - i * (i - 1) // 2
    return np.column_stack([j, i])


def gen_er(n: int, avg_degree: float, seed: int) -> Graph:
    """Giant component of a G(n, p) draw with ``p = avg_degree / (n - 1)``.

    Edges are drawn by geometric skipping over the ``n(n-1)/2`` vertex
    pairs, which samples G(n, p) exactly in time linear in the edge count.
    """
    if n < 2:
        raise GraphError(f"n must be >= 2, got {n}")
    if not 0 < avg_degree <= n - 1:
        raise GraphError(f"avg_degree must lie in (0, n-1], got {avg_degree}")
    p = min(1.0, avg_degree / (n - 1))
    total = n * (n - 1) // 2
    gen = _seeding.rng(seed, 0)
    chunk = int(total * p + 6 * np.sqrt(total * p) + 16)
    picks = []
    pos = -1
    while True:
        gaps = gen.geometric(p, size=chunk).astype(np.int64)
        idx = pos + np.cumsum(gaps)
        if idx[-1] >= total:
            picks.append(idx[idx < total])
            break
        picks.append(idx)
        pos = int(idx[-1])
    edges = _decode_pairs(np.concatenate(picks))
    g = giant_component(edges, num_vertices=n)
    if g.num_vertices < 2:
        raise GraphError("largest component has fewer than 2 vertices")
    return g


def gen_ba(n: int, m: int, seed: int) -> Graph:
    """Preferential-attachment growth from a complete graph on ``m + 1`` vertices.

    Each new vertex attaches to ``m`` distinct existing vertices chosen with
    probability proportional to their current degree.
    """
    if not 1 <= m < n:
        raise GraphError(f"need n > m >= 1, got n={n}, m={m}")
    gen = _seeding.rng(seed, 1)
    seed_edges = [(a, b) for b in range(m + 1) for a in range(b)]
    # each vertex appears once per incident edge end
    ends = [x for e in seed_edges for x in e]
    edges = np.empty((len(seed_edges) + (n - m - 1) * m, 2), dtype=np.int64)
    edges[: len(seed_edges)] = seed_edges if seed_edges else np.empty((0, 2))
    row = len(seed_edges)
    buf = gen.random(4096).tolist()
    pos = 0
    for v in range(m + 1, n):
        fill = len(ends)
        chosen: list[int] = []
        while len(chosen) < m:
            if pos == len(buf):
                buf = gen.random(4096).tolist()
                pos = 0
            t = ends[int(buf[pos] * fill)]
            pos += 1
            if t not in chosen:
                chosen.append(t)
        for t in chosen:
            edges[row] = (t, v)
            row += 1
            ends.append(t)
            ends.append(v)
    return Graph.from_edges(n, edges)


class EdgeListStats(NamedTuple):
    raw_nodes: int
    raw_edges: int
    num_vertices: int
    num_edges: int


def read_edge_list(path: str | os.PathLike) -> tuple[Graph, EdgeListStats]:
    """Parse a whitespace-separated edge list and keep its giant component.

    Blank lines and lines starting with ``#`` are skipped. ``raw_edges``
    counts distinct non-loop edges before component extraction.
    """
    pairs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            try:
                if len(parts) != 2:
                    raise ValueError
                u, v = int(parts[0]), int(parts[1])
                if u < 0 or v < 0:
                    raise ValueError
            except ValueError:
                raise GraphError(
                    f"{path}:{lineno}: expected two non-negative integer ids, got {s!r}"
                ) from None
            pairs.append((u, v))
    if not pairs:
        raise GraphError(f"{path}: no edges")
    raw = np.asarray(pairs, dtype=np.int64)
    raw_nodes = np.unique(raw).size
    loops = raw[:, 0] == raw[:, 1]
    lo = np.minimum(raw[~loops, 0], raw[~loops, 1])
    hi = np.maximum(raw[~loops, 0], raw[~loops, 1])
    distinct = np.unique(np.column_stack([lo, hi]), axis=0)
    if distinct.size == 0:
        raise GraphError(f"{path}: only self-loops")
    g = giant_component(distinct)
    stats = EdgeListStats(raw_nodes, len(distinct), g.num_vertices, g.num_edges)
    log.info("loaded %s: %d raw nodes, %d raw edges, kept N=%d M=%d", path, *stats)
    return g, stats


def load_edge_list(path: str | os.PathLike) -> Graph:
    return read_edge_list(path)[0]


def save_edge_list(g: Graph, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(f"# N={g.num_vertices} M={g.num_edges}\n")
        np.savetxt(fh, g.edges(), fmt="%d")
