from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from rwbroadcast.topology import (GraphTopology, cycle, graph_distance, neighbors, path,
                                  stationary_distribution)


@pytest.mark.parametrize("g, v, expected", [
    (path(5), 1, [2]),
    (path(5), 3, [2, 4]),
    (path(5), 5, [4]),
    (cycle(5), 1, [2, 5]),
    (cycle(5), 5, [1, 4]),
])
def test_neighbors(g, v, expected):
    assert neighbors(g, v) == expected


@pytest.mark.parametrize("v", [0, 6, -1])
def test_neighbors_out_of_range(v):
    with pytest.raises(ValueError):
        neighbors(path(5), v)


def test_edges():
    assert path(4).edges() == [(1, 2), (2, 3), (3, 4)]
    assert cycle(4).edges() == [(1, 2), (2, 3), (3, 4), (1, 4)]


def test_invalid_sizes():
    with pytest.raises(ValueError):
        path(1)
    with pytest.raises(ValueError):
        cycle(2)


@pytest.mark.parametrize("g, expected", [
    (path(3), [Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)]),
    (cycle(4), [Fraction(1, 4)] * 4),
    (path(2), [Fraction(1, 2)] * 2),
])
def test_stationary_examples(g, expected):
    assert list(stationary_distribution(g)) == expected


def test_stationary_float_above_threshold():
    pi = stationary_distribution(path(20_000))
    assert abs(pi.sum() - 1) < 1e-12
    assert pi[0] == pytest.approx(1 / (2 * 19_999))


@pytest.mark.parametrize("g, u, v, d", [
    (path(6), 1, 6, 5),
    (cycle(6), 1, 6, 1),
    (cycle(6), 1, 4, 3),
])
def test_distance(g, u, v, d):
    assert graph_distance(g, u, v) == d


def test_distance_out_of_range():
    with pytest.raises(ValueError):
        graph_distance(cycle(6), 0, 3)


graphs = st.builds(GraphTopology, st.sampled_from(["path", "cycle"]), st.integers(3, 60))


@given(graphs)
def test_neighbor_relation_symmetric(g):
    for v in range(1, g.n + 1):
        nb = g.neighbors(v)
        assert len(nb) == g.degree(v)
        assert nb == sorted(nb)
        for u in nb:
            assert v in g.neighbors(u)
            assert g.distance(u, v) == 1


@given(graphs)
def test_stationary_sums_to_one(g):
    pi = stationary_distribution(g)
    assert sum(pi) == 1
    if g.is_cycle:
        assert len(set(pi)) == 1


@given(graphs, st.data())
def test_distance_matches_bfs(g, data):
    u = data.draw(st.integers(1, g.n))
    dist = {u: 0}
    frontier = [u]
    while frontier:
        nxt = []
        for x in frontier:
            for y in g.neighbors(x):
                if y not in dist:
                    dist[y] = dist[x] + 1
                    nxt.append(y)
        frontier = nxt
    assert all(g.distance(u, v) == d for v, d in dist.items())
