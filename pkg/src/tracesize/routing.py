"""Traceroute-like sampling with fixed shortest-path routes.

Each source owns one shortest-path tree whose ties are broken at random
once, when the tree is built. A trace from that source to any vertex is
the tree path, so routes do not depend on which target elicited them.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np

from tracesize import _seeding
from tracesize._kernels import bfs_path_counts, pick_parents
from tracesize.graph import Graph, GraphError

# stream keys under a study seed
_SAMPLE_STREAM = 0
_TIEBREAK_STREAM = 1

TIE_BREAKS = ("path", "parent")


class StudyError(ValueError):
    """Invalid source/target configuration."""


@dataclass(frozen=True, eq=False)
class RouteTable:
    source: int
    parent: np.ndarray
    dist: np.ndarray


def build_route_table(
    g: Graph, source: int, seed: int, tie_break: str = "path"
) -> RouteTable:
    """BFS tree from ``source`` with random tie-breaking, drawn once.

    ``tie_break="path"`` draws each vertex's parent with probability
    proportional to the parent's number of shortest paths from the
    source, so the tree path to every vertex is a uniformly random
    shortest path. ``tie_break="parent"`` draws the parent uniformly among
    the neighbours one hop closer. The source is its own parent; vertices
    in other components get -1.
    """
    n = g.num_vertices
    if not 0 <= source < n:
        raise GraphError(f"source {source} out of range [0, {n})")
    if tie_break not in TIE_BREAKS:
        raise ValueError(f"tie_break must be one of {TIE_BREAKS}, got {tie_break!r}")
    dist, sigma = bfs_path_counts(g.indptr, g.indices, int(source))
    if tie_break == "parent":
        sigma = np.ones(n)
    u = _seeding.rng(seed).random(n)
    parent = pick_parents(g.indptr, g.indices, dist, sigma, u)
    parent.setflags(write=False)
    dist.setflags(write=False)
    return RouteTable(int(source), parent, dist)


def trace(rt: RouteTable, target: int) -> list[int]:
    """Vertex sequence from the route table's source to ``target``."""
    if not 0 <= target < rt.parent.size:
        raise GraphError(f"target {target} out of range")
    if rt.dist[target] < 0:
        raise GraphError(f"target {target} unreachable from {rt.source}")
    path = [int(target)]
    v = int(target)
    while v != rt.source:
        v = int(rt.parent[v])
        path.append(v)
    path.reverse()
    return path


def _climb(rt: RouteTable, targets: np.ndarray):
    """All (vertex, target index) incidences and traversed edges of the traces."""
    parent, s = rt.parent, rt.source
    cur = np.asarray(targets, dtype=np.int64)
    if (rt.dist[cur] < 0).any():
        raise GraphError(f"some targets are unreachable from source {s}")
    jj = np.arange(cur.size, dtype=np.int64)
    vs, js, es = [], [], []
    while cur.size:
        vs.append(cur)
        js.append(jj)
        live = cur != s
        cur, jj = cur[live], jj[live]
        up = parent[cur]
        es.append(np.column_stack([cur, up]))
        cur = up
    return np.concatenate(vs), np.concatenate(js), np.concatenate(es)


def _edge_keys(e: np.ndarray, n: int) -> np.ndarray:
    return np.minimum(e[:, 0], e[:, 1]) * n + np.maximum(e[:, 0], e[:, 1])


@dataclass(frozen=True, eq=False)
class TraceStudy:
    """Merged outcome of tracing from every source to every target.

    Coverage is stored as sorted parallel arrays ``cover_vertex`` /
    ``cover_target``: one entry per distinct pair (v, j) such that vertex
    ``v`` lies on the trace from some source to target ``j``.
    """

    num_graph_vertices: int
    sources: np.ndarray
    targets: np.ndarray
    vertices: np.ndarray
    edges: np.ndarray
    cover_vertex: np.ndarray
    cover_target: np.ndarray
    paths: dict[tuple[int, int], list[int]] | None = field(default=None)

    @property
    def n_sources(self) -> int:
        return self.sources.size

    @property
    def n_targets(self) -> int:
        return self.targets.size

    @property
    def n_star(self) -> int:
        return self.vertices.size

    @property
    def m_star(self) -> int:
        return len(self.edges)

    @property
    def sampled_vertices(self) -> frozenset[int]:
        return frozenset(self.vertices.tolist())

    @property
    def sampled_edges(self) -> frozenset[tuple[int, int]]:
        return frozenset(map(tuple, self.edges.tolist()))

    @cached_property
    def cover(self) -> dict[int, frozenset[int]]:
        """Target indices whose traces reach each discovered vertex."""
        out: dict[int, frozenset[int]] = {int(v): frozenset() for v in self.vertices}
        bounds = np.flatnonzero(np.diff(self.cover_vertex)) + 1
        for chunk_v, chunk_j in zip(
            np.split(self.cover_vertex, bounds), np.split(self.cover_target, bounds)
        ):
            if chunk_v.size:
                out[int(chunk_v[0])] = frozenset(chunk_j.tolist())
        return out

    def target_vertices(self, j: int) -> np.ndarray:
        """Vertices on the traces to target ``j`` from all sources."""
        return np.unique(self.cover_vertex[self.cover_target == j])

    def sampled_graph(self) -> Graph:
        """G* relabelled to ``0..N*-1``; ``labels`` hold the ids in G."""
        local = np.searchsorted(self.vertices, self.edges)
        return Graph.from_edges(self.n_star, local, labels=self.vertices)


def _check_sets(n: int, sources, targets) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(sources, dtype=np.int64).ravel()
    t = np.asarray(targets, dtype=np.int64).ravel()
    if s.size < 1 or t.size < 1:
        raise StudyError("need at least one source and one target")
    for name, a in (("source", s), ("target", t)):
        if a.min() < 0 or a.max() >= n:
            raise StudyError(f"{name} id out of range [0, {n})")
        if np.unique(a).size != a.size:
            raise StudyError(f"duplicate {name} ids")
    if np.intersect1d(s, t).size:
        raise StudyError("sources and targets overlap")
    return s, t


def sample_endpoints(n: int, n_sources: int, n_targets: int, seed: int):
    """Sources uniformly from all vertices, then targets from the rest."""
    if n_sources < 1 or n_targets < 1:
        raise StudyError("n_S and n_T must be positive")
    if n_sources + n_targets > n:
        raise StudyError(f"n_S + n_T = {n_sources + n_targets} exceeds N = {n}")
    gen = _seeding.rng(seed, _SAMPLE_STREAM)
    perm = gen.permutation(n)
    return perm[:n_sources], perm[n_sources:n_sources + n_targets]


def run_study(
    g: Graph,
    n_sources: int,
    n_targets: int,
    seed: int,
    *,
    keep_paths: bool = False,
    include_source_paths: bool = False,
    tie_break: str = "path",
) -> TraceStudy:
    """Simulate a traceroute study with uniformly sampled endpoints."""
    if n_targets < 2:
        raise StudyError("n_T must be >= 2")
    s, t = sample_endpoints(g.num_vertices, n_sources, n_targets, seed)
    return run_study_with(
        g, s, t, seed,
        keep_paths=keep_paths,
        include_source_paths=include_source_paths,
        tie_break=tie_break,
    )


def run_study_with(
    g: Graph,
    sources: Iterable[int],
    targets: Iterable[int],
    seed: int,
    *,
    keep_paths: bool = False,
    include_source_paths: bool = False,
    tie_break: str = "path",
) -> TraceStudy:
    """Simulate a traceroute study between caller-chosen endpoints.

    Tie-breaking for source ``s`` uses the stream ``(seed, 1, s)``, so a
    source's routes do not depend on the other endpoints chosen.
    With ``include_source_paths`` the traces between sources are merged
    into V* and E* as well; they contribute nothing to target coverage.
    """
    n = g.num_vertices
    s_arr, t_arr = _check_sets(n, list(sources), list(targets))
    n_t = t_arr.size
    pv, pj, pe = [], [], []
    extra_v, extra_e = [], []
    paths: dict[tuple[int, int], list[int]] | None = {} if keep_paths else None
    for i, s in enumerate(s_arr.tolist()):
        rt = build_route_table(g, s, _seeding.child_seed(seed, _TIEBREAK_STREAM, s), tie_break)
        v, j, e = _climb(rt, t_arr)
        pv.append(v)
        pj.append(j)
        pe.append(e)
        if include_source_paths and s_arr.size > 1:
            v2, _, e2 = _climb(rt, s_arr[s_arr != s])
            extra_v.append(v2)
            extra_e.append(e2)
        if paths is not None:
            for jj, t in enumerate(t_arr.tolist()):
                paths[(i, jj)] = trace(rt, t)
    key = np.unique(np.concatenate(pv) * n_t + np.concatenate(pj))
    cover_v, cover_j = key // n_t, key % n_t
    vertices = np.unique(np.concatenate([cover_v, *extra_v]))
    ekey = np.unique(_edge_keys(np.concatenate([*pe, *extra_e]), n))
    edges = np.column_stack([ekey // n, ekey % n]).reshape(-1, 2)
    return TraceStudy(
        num_graph_vertices=n,
        sources=s_arr,
        targets=t_arr,
        vertices=vertices,
        edges=edges,
        cover_vertex=cover_v,
        cover_target=cover_j,
        paths=paths,
    )


def count_discovered(g: Graph, sources, targets, seed: int, tie_break: str = "path") -> int:
    """|V*| of ``run_study_with(g, sources, targets, seed)`` without the bookkeeping."""
    n = g.num_vertices
    s_arr, t_arr = _check_sets(n, sources, targets)
    found = np.zeros(n, dtype=bool)
    for s in s_arr.tolist():
        rt = build_route_table(g, s, _seeding.child_seed(seed, _TIEBREAK_STREAM, s), tie_break)
        parent = rt.parent
        seen = np.zeros(n, dtype=bool)
        cur = t_arr
        while cur.size:
            cur = cur[~seen[cur]]
            seen[cur] = True
            cur = parent[cur]
        found |= seen
    return int(found.sum())


def dump_study(study: TraceStudy, path: str | os.PathLike) -> None:
    """Write S, T and every trace, one whitespace-separated record per line.

    Lines are ``S <ids>``, ``T <ids>`` and ``P <i> <j> <v0> ... <vk>``.
    The study must have been run with ``keep_paths=True``.
    """
    if study.paths is None:
        raise StudyError("study was run without keep_paths")
    with open(path, "w") as fh:
        fh.write("S " + " ".join(map(str, study.sources.tolist())) + "\n")
        fh.write("T " + " ".join(map(str, study.targets.tolist())) + "\n")
        for (i, j), p in sorted(study.paths.items()):
            fh.write(f"P {i} {j} " + " ".join(map(str, p)) + "\n")


def read_study_dump(path: str | os.PathLike):
    """Parse a dump back into ``(sources, targets, paths)``."""
    sources: list[int] = []
    targets: list[int] = []
    paths: dict[tuple[int, int], list[int]] = {}
    with open(path) as fh:
        for line in fh:
            tag, *rest = line.split()
            vals = list(map(int, rest))
            if tag == "S":
                sources = vals
            elif tag == "T":
                targets = vals
            elif tag == "P":
                paths[(vals[0], vals[1])] = vals[2:]
            else:
                raise StudyError(f"unknown record {tag!r}")
    return sources, targets, paths
