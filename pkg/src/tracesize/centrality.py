"""Betweenness and path-length diagnostics.

Betweenness sums over ordered vertex pairs, so each unordered pair
contributes twice. With that convention the betweenness total and the
mean shortest-path length satisfy ``sum(b) = N (N - 1) (l - 1)``, which
gives ``N = 1 + mean(b) / (l - 1)``.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from tracesize._kernels import brandes, distance_sum
from tracesize.graph import Graph, GraphError


def _require_connected(g: Graph) -> None:
    if g.num_vertices < 1 or not g.is_connected():
        raise GraphError("graph must be connected")


def betweenness(g: Graph) -> np.ndarray:
    """Exact shortest-path betweenness of every vertex (ordered pairs)."""
    _require_connected(g)
    return brandes(g.indptr, g.indices)


def avg_path_length(g: Graph) -> float:
    """Mean hop distance over ordered pairs of distinct vertices."""
    _require_connected(g)
    if g.num_vertices < 2:
        raise GraphError("need at least 2 vertices")
    total, pairs = distance_sum(g.indptr, g.indices)
    return total / pairs


@dataclass(frozen=True)
class CentralityProfile:
    betweenness: np.ndarray
    avg_path_length: float

    @property
    def sum_b(self) -> float:
        return float(self.betweenness.sum())


def profile(g: Graph) -> CentralityProfile:
    return CentralityProfile(betweenness(g), avg_path_length(g))


@dataclass(frozen=True)
class SizeIdentity:
    lhs: float
    rhs: float
    n_from_eq: float | None

    @property
    def defined(self) -> bool:
        return self.n_from_eq is not None


def check_size_identity(g: Graph, prof: CentralityProfile | None = None) -> SizeIdentity:
    """Both sides of the betweenness/path-length identity and the implied N.

    ``n_from_eq`` is None for complete graphs, where the mean path length
    is exactly 1 and the reconstruction divides by zero.
    """
    prof = prof or profile(g)
    n = g.num_vertices
    ell = prof.avg_path_length
    lhs = prof.sum_b
    rhs = n * (n - 1) * (ell - 1.0)
    # every pair adjacent <=> l == 1 exactly
    complete = g.num_edges == n * (n - 1) // 2
    n_eq = None if complete else 1.0 + float(prof.betweenness.mean()) / (ell - 1.0)
    return SizeIdentity(lhs, rhs, n_eq)


def identity_holds(ident: SizeIdentity, n: int, rtol: float = 1e-6) -> bool:
    scale = max(1.0, abs(ident.rhs))
    ok = abs(ident.lhs - ident.rhs) <= rtol * scale
    if ident.n_from_eq is not None:
        ok = ok and math.isclose(ident.n_from_eq, n, rel_tol=rtol)
    return ok


def write_centrality_csv(g: Graph, path: str | os.PathLike,
                         b: np.ndarray | None = None) -> None:
    b = betweenness(g) if b is None else b
    deg = g.degrees()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["vertex", "degree", "betweenness"])
        for v in range(g.num_vertices):
            w.writerow([v, int(deg[v]), repr(float(b[v]))])
