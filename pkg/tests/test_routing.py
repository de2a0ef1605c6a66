from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import (
    all_shortest_paths,
    bfs_oracle,
    complete_graph,
    cycle_graph,
    path_graph,
    random_connected,
    star_graph,
)
from tracesize.graph import Graph, GraphError, gen_er
from tracesize.routing import (
    StudyError,
    build_route_table,
    count_discovered,
    dump_study,
    read_study_dump,
    run_study,
    run_study_with,
    trace,
)

# 0 reaches 6 by 0-1-4-6, 0-2-4-6 and 0-3-5-6
DIAMOND = Graph.from_edges(7, [(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 5), (4, 6), (5, 6)])


class TestRouteTable:
    def test_path_graph(self):
        rt = build_route_table(path_graph(3), 0, seed=1)
        assert rt.parent.tolist() == [0, 0, 1]
        assert rt.dist.tolist() == [0, 1, 2]

    def test_complete_graph(self):
        rt = build_route_table(complete_graph(4), 0, seed=1)
        assert rt.dist.tolist() == [0, 1, 1, 1]
        assert rt.parent.tolist() == [0, 0, 0, 0]

    @pytest.mark.parametrize("tie_break", ["path", "parent"])
    def test_four_cycle_ties_are_fair(self, tie_break):
        g = cycle_graph(4)
        picks = Counter(
            int(build_route_table(g, 0, seed, tie_break).parent[2]) for seed in range(10_000)
        )
        assert set(picks) == {1, 3}
        assert abs(picks[1] / 10_000 - 0.5) <= 0.05

    def test_path_mode_draws_uniform_shortest_path(self):
        oracle = all_shortest_paths(DIAMOND.adjacency, 0, 6)
        assert len(oracle) == 3
        counts = Counter(
            tuple(trace(build_route_table(DIAMOND, 0, s, "path"), 6)) for s in range(6000)
        )
        assert set(counts) == {tuple(p) for p in oracle}
        for p in oracle:
            assert abs(counts[tuple(p)] / 6000 - 1 / 3) <= 0.03

    def test_parent_mode_draws_uniform_parent(self):
        picks = Counter(int(build_route_table(DIAMOND, 0, s, "parent").parent[6]) for s in range(6000))
        assert abs(picks[4] / 6000 - 0.5) <= 0.03

    def test_source_out_of_range(self):
        with pytest.raises(GraphError):
            build_route_table(path_graph(3), 3, seed=0)

    def test_unknown_tie_break(self):
        with pytest.raises(ValueError):
            build_route_table(path_graph(3), 0, 0, "random")

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 40), st.integers(0, 40), st.integers(0, 2**32))
    def test_tree_invariants(self, n, extra, seed):
        g = random_connected(n, extra, np.random.default_rng(seed))
        s = seed % n
        rt = build_route_table(g, s, seed)
        dist = bfs_oracle(g.adjacency, s)
        assert rt.dist.tolist() == [dist[v] for v in range(n)]
        assert rt.parent[s] == s
        for v in range(n):
            if v != s:
                p = int(rt.parent[v])
                assert rt.dist[v] == rt.dist[p] + 1
                assert p in g.neighbors(v)


class TestTrace:
    def test_target_is_source(self):
        assert trace(build_route_table(path_graph(3), 1, 0), 1) == [1]

    def test_path(self):
        assert trace(build_route_table(path_graph(3), 0, 0), 2) == [0, 1, 2]

    def test_star_goes_through_center(self):
        assert trace(build_route_table(star_graph(4), 2, 0), 3) == [2, 0, 3]

    def test_target_out_of_range(self):
        with pytest.raises(GraphError):
            trace(build_route_table(path_graph(3), 0, 0), 7)


class TestStudy:
    def test_single_path_covers_everything(self):
        s = run_study_with(path_graph(5), [0], [4], seed=3)
        assert (s.n_star, s.m_star) == (5, 4)
        assert s.sampled_vertices == {0, 1, 2, 3, 4}

    def test_star_two_leaf_targets(self):
        s = run_study_with(star_graph(6), [1], [2, 3], seed=0)
        assert (s.n_star, s.m_star) == (4, 3)
        assert s.cover[0] == {0, 1}
        assert s.cover[2] == {0} and s.cover[3] == {1}

    def test_triangle(self):
        s = run_study_with(complete_graph(3), [0], [1, 2], seed=0, keep_paths=True)
        assert s.paths == {(0, 0): [0, 1], (0, 1): [0, 2]}
        assert (s.n_star, s.m_star) == (3, 2)

    @pytest.mark.parametrize("src, tgt", [([0], [0]), ([0, 0], [1]), ([0], [1, 1]), ([0], [9]), ([], [1])])
    def test_bad_endpoints(self, src, tgt):
        with pytest.raises(StudyError):
            run_study_with(path_graph(5), src, tgt, seed=0)

    def test_run_study_preconditions(self):
        with pytest.raises(StudyError):
            run_study(path_graph(5), 3, 3, seed=0)
        with pytest.raises(StudyError):
            run_study(path_graph(5), 1, 1, seed=0)
        with pytest.raises(StudyError):
            run_study(path_graph(5), 0, 2, seed=0)

    def test_deterministic(self):
        g = gen_er(800, 6, 2)
        a = run_study(g, 3, 40, seed=17)
        b = run_study(g, 3, 40, seed=17)
        for f in ("sources", "targets", "vertices", "edges", "cover_vertex", "cover_target"):
            assert np.array_equal(getattr(a, f), getattr(b, f))
        c = run_study(g, 3, 40, seed=18)
        assert not np.array_equal(a.targets, c.targets)

    def test_sampling_is_uniform_and_disjoint(self):
        g = path_graph(10)
        hits = np.zeros(10)
        for seed in range(3000):
            s = run_study(g, 2, 3, seed)
            assert not set(s.sources) & set(s.targets)
            hits[s.sources] += 1
        np.testing.assert_allclose(hits / 3000, 0.2, atol=0.03)

    def test_count_discovered_matches(self):
        g = gen_er(1500, 5, 8)
        for seed in range(5):
            s = run_study(g, 4, 60, seed)
            assert count_discovered(g, s.sources, s.targets, seed) == s.n_star

    def test_sampled_graph(self):
        g = gen_er(600, 6, 1)
        s = run_study(g, 2, 30, seed=4)
        gs = s.sampled_graph()
        assert gs.num_vertices == s.n_star and gs.num_edges == s.m_star
        assert gs.is_connected()
        assert np.array_equal(gs.labels, s.vertices)

    def test_source_paths_option(self):
        # vertex 1 lies only on the unique 0-3 route; target 5 is reached via 4 and directly
        g = Graph.from_edges(6, [(0, 1), (1, 3), (0, 4), (4, 5), (3, 5)])
        base = run_study_with(g, [0, 3], [5], seed=0)
        more = run_study_with(g, [0, 3], [5], seed=0, include_source_paths=True)
        assert (base.n_star, base.m_star) == (4, 3)
        assert (more.n_star, more.m_star) == (5, 5)
        assert more.cover[1] == frozenset()
        assert 1 not in base.sampled_vertices

    def test_dump_roundtrip(self, tmp_path):
        g = gen_er(300, 6, 3)
        s = run_study(g, 2, 5, seed=9, keep_paths=True)
        dump_study(s, tmp_path / "d.txt")
        src, tgt, paths = read_study_dump(tmp_path / "d.txt")
        assert src == s.sources.tolist() and tgt == s.targets.tolist()
        assert paths == s.paths

    def test_dump_needs_paths(self, tmp_path):
        s = run_study(path_graph(5), 1, 2, seed=0)
        with pytest.raises(StudyError):
            dump_study(s, tmp_path / "d.txt")


@settings(max_examples=40, deadline=None)
@given(st.integers(6, 40), st.integers(0, 60), st.integers(1, 3), st.integers(2, 5), st.integers(0, 2**32))
def test_study_invariants(n, extra, n_s, n_t, seed):
    g = random_connected(n, extra, np.random.default_rng(seed))
    if n_s + n_t > n:
        return
    s = run_study(g, n_s, n_t, seed, keep_paths=True)
    adj = g.adjacency
    union = set()
    for (i, j), p in s.paths.items():
        src, tgt = int(s.sources[i]), int(s.targets[j])
        assert p[0] == src and p[-1] == tgt
        assert len(p) - 1 == bfs_oracle(adj, src)[tgt]
        for a, b in zip(p, p[1:]):
            assert b in adj[a]
            assert (min(a, b), max(a, b)) in s.sampled_edges
        union.update(p)
        assert j in s.cover[tgt]
    assert union == s.sampled_vertices
    assert s.n_star >= n_s + n_t
    assert s.m_star >= s.n_star - n_s
    assert sum(len(c) >= 1 for c in s.cover.values()) == s.n_star
    # fixed routes: traces from one source agree on every shared prefix
    for i in range(n_s):
        seen = {}
        for j in range(n_t):
            p = s.paths[(i, j)]
            for k, v in enumerate(p):
                if v in seen:
                    assert seen[v] == p[: k + 1]
                else:
                    seen[v] = p[: k + 1]


@settings(max_examples=25, deadline=None)
@given(st.integers(8, 40), st.integers(0, 40), st.integers(0, 2**32))
def test_adding_a_target_never_loses_discoveries(n, extra, seed):
    g = random_connected(n, extra, np.random.default_rng(seed))
    perm = np.random.default_rng(seed + 1).permutation(n)
    src, tgt = perm[:2], perm[2:6]
    small = run_study_with(g, src, tgt[:3], seed)
    big = run_study_with(g, src, tgt, seed)
    assert small.sampled_vertices <= big.sampled_vertices
    assert small.sampled_edges <= big.sampled_edges
