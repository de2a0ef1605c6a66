from collections import deque
from itertools import combinations

import numpy as np
import pytest

from tracesize.graph import Graph

# lines collected by the acceptance module, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def path_graph(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n):
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def star_graph(leaves):
    """Center 0, leaves 1..leaves."""
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def complete_graph(n):
    return Graph.from_edges(n, list(combinations(range(n), 2)))


def random_tree(n, gen):
    return Graph.from_edges(n, [(int(gen.integers(0, v)), v) for v in range(1, n)])


def random_connected(n, extra, gen):
    """Random tree plus ``extra`` random chords."""
    edges = [(int(gen.integers(0, v)), v) for v in range(1, n)]
    for _ in range(extra):
        a, b = gen.integers(0, n, size=2)
        edges.append((int(a), int(b)))
    return Graph.from_edges(n, edges)


def bfs_oracle(adj, s):
    """Plain-Python BFS distances over an adjacency list."""
    dist = {s: 0}
    q = deque([s])
    while q:
        v = q.popleft()
        for w in adj[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                q.append(w)
    return dist


def all_shortest_paths(adj, s, t):
    """Every shortest s-t path, by explicit enumeration."""
    dist = bfs_oracle(adj, s)
    if t not in dist:
        return []
    out = []

    def walk(path):
        v = path[-1]
        if v == t:
            out.append(list(path))
            return
        for w in adj[v]:
            if dist.get(w) == dist[v] + 1 and dist[w] <= dist[t]:
                path.append(w)
                walk(path)
                path.pop()

    walk([s])
    return [p for p in out if len(p) - 1 == dist[t]]


def betweenness_oracle(g):
    adj = g.adjacency
    n = g.num_vertices
    b = np.zeros(n)
    for h in range(n):
        for j in range(n):
            if h == j:
                continue
            paths = all_shortest_paths(adj, h, j)
            for i in range(n):
                if i in (h, j):
                    continue
                b[i] += sum(i in p for p in paths) / len(paths)
    return b


@pytest.fixture
def gen():
    return np.random.default_rng(12345)
