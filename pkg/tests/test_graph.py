from fractions import Fraction as F

import pytest

from puzzle_forge.angles import tune
from puzzle_forge.graph import (
    NoPathToCritical,
    NotRenormalizable,
    PullbackUnsupported,
    ReturnGraph,
    build_graph,
    export_dot,
    period,
    pull_back_along,
    rank,
    reduce,
    reduced_period,
    sandwich_holds,
    shortest_path_to_critical,
    time_of,
    to_json,
)
from puzzle_forge.markov import cascade_bernoulli
from puzzle_forge.nest import build_nest, direct_time, replay_count
from puzzle_forge.numerics.rays import center_for_angle
from puzzle_forge.renorm import full_nest

from oracles import superattracting_period

SUITE = [
    F(3, 7), F(5, 31), F(11, 31), F(55, 127), F(439, 1023), F(875, 2047),
    F(36292, 65535), F(72561, 131071),
]
TUNED_AIRPLANE = tune(F(3, 7), (F(1, 3), F(2, 3)))


def graph_of(theta):
    return build_graph(full_nest(theta).stages)


def test_vertical_path_and_critical_edges():
    g = build_graph(build_nest(F(3, 7)))
    assert all(idx == (0,) for idx in g.levels)
    for n in range(1, len(g.levels)):
        assert g.up[(n, 0)] == (((n - 1, 0), 3 if n == 1 else 1),)
    for theta in SUITE:
        g = build_graph(build_nest(theta))
        for (n, j), edges in g.up.items():
            if n >= 2:
                assert sum(1 for u, _ in edges if u == (n - 1, 0)) == 1


def test_nonrecurrent_graph_is_shallow():
    g = build_graph(build_nest(F(1, 6)))
    assert len(g.levels) == 1 and g.edge_count == 0
    with pytest.raises(NotRenormalizable):
        period(g)


def test_airplane_times():
    g = build_graph(build_nest(F(3, 7)))
    assert period(g) == time_of(g, g.bottom, 0) == 3
    for v in g.vertices[1:]:
        assert time_of(g, v, v[0] - 1) == sum(k for _, k in g.up[v])


@pytest.mark.parametrize("theta", SUITE)
def test_time_of_equals_direct_return_time(theta):
    r = build_nest(theta)
    g = build_graph(r)
    for n1 in range(1, len(r.levels)):
        for d in r.levels[n1].domains:
            for m in range(n1):
                assert time_of(g, (n1, d.index), m) == direct_time(r, n1, d.index, m)


@pytest.mark.parametrize("theta", SUITE)
def test_period_is_recorded_return_time(theta):
    chain = full_nest(theta)
    g = build_graph(chain.stages)
    assert period(g) == chain.per == chain.stages[0].per
    assert 1 <= reduced_period(g) <= period(g)


def test_tuned_airplane_period_six():
    assert TUNED_AIRPLANE == F(26, 63)
    g = graph_of(TUNED_AIRPLANE)
    assert period(g) == 6
    c, residual = center_for_angle(TUNED_AIRPLANE)
    assert residual < 1e-9 and superattracting_period(c) == 6


@pytest.mark.parametrize("theta", SUITE)
def test_reduced_times_match_skip_replay(theta):
    r = build_nest(theta)
    g = build_graph(r)
    red = reduce(g)
    for n1 in range(1, len(r.levels)):
        for d in r.levels[n1].domains:
            for m in range(n1):
                want = replay_count(r, n1, d.index, m, skip=red.removed)
                assert time_of(red, (n1, d.index), m) == want
    # removing cascade edges keeps every vertex connected to the top
    assert all(time_of(red, v, 0) > 0 for v in red.vertices)


@pytest.mark.parametrize("theta", SUITE)
def test_g_times_are_reduced_path_counts(theta):
    r = build_nest(theta)
    red = reduce(build_graph(r))
    checked = 0
    for c in r.cascades:
        m, N = c.start, c.length
        if N < 2 or m + N + 1 >= len(r.levels):
            continue
        scheme = cascade_bernoulli(r, c)
        for d in r.levels[m + N + 1].domains:
            assert scheme.g_time(m + N + 1, d.index) == time_of(red, (m + N + 1, d.index), m + 1)
            checked += 1
    if theta in (F(36292, 65535), F(72561, 131071), F(439, 1023)):
        assert checked


def test_reduce_is_identity_without_long_cascades():
    g = build_graph(build_nest(F(36292, 65535)))
    short = ReturnGraph(
        g.levels, g.up, tuple(c for c in g.cascades if c.length < 2), g.stage_of,
        g.local_level, g.central, g.bottom,
    )
    red = reduce(short)
    assert red.up == short.up and not red.removed


def test_bound_law_on_suite():
    for theta in SUITE:
        g = graph_of(theta)
        R = max(sum(k for _, k in edges) for edges in g.up.values())
        T = len(g.levels) - 1
        assert period(g) <= R**T


def test_rank_and_paths():
    g = build_graph(build_nest(F(36292, 65535)))
    for v in g.vertices:
        if v[1] == 0:
            assert rank(g, v) == 0
        path = shortest_path_to_critical(g, v)
        assert path[0] == v and path[-1][1] == 0
    lonely = ReturnGraph(((0,), (0, 1)), {(1, 0): (((0, 0), 1),)}, (), (0, 0), (0, 1), (False, False), None)
    with pytest.raises(NoPathToCritical):
        rank(lonely, (1, 1))


def test_pull_back_along_trivial_path():
    r = build_nest(F(439, 1023))
    g = build_graph(r)
    v = (3, 0)
    piece = pull_back_along(g, [v])
    assert piece.depth == r.levels[3].depth and piece.degree == 1
    with pytest.raises(ValueError):
        pull_back_along(g, [])


@pytest.mark.parametrize("theta", [F(3, 7), TUNED_AIRPLANE, F(439, 1023), F(36292, 65535)])
def test_sandwich(theta):
    g = graph_of(theta)
    checked = 0
    for v in g.vertices:
        try:
            ok, path, piece = sandwich_holds(g, v)
        except (PullbackUnsupported, NoPathToCritical):
            continue
        assert ok, (v, path, piece)
        assert piece.degree == 2
        checked += 1
    assert checked >= 2


def test_dot_export():
    empty = ReturnGraph((), {}, (), (), (), (), None)
    assert export_dot(empty) == "digraph return_graph {\n  rankdir=BT;\n  node [shape=circle];\n}\n"
    g = build_graph(build_nest(F(36292, 65535)))
    full = export_dot(g, "full")
    red = export_dot(g, "reduced")
    edges = lambda text: {ln.strip() for ln in text.splitlines() if "->" in ln}
    assert len(edges(full)) == len(g.edges())
    nodes = {ln.strip() for ln in full.splitlines() if "[label=\"V" in ln}
    assert len(nodes) == len(g.vertices)
    gone = edges(full) - edges(red)
    removed = reduce(g).removed
    assert {(ln.split(" -> ")[0], ln.split(" -> ")[1].split(" ")[0]) for ln in gone} == {
        (f"v{v[0]}_{v[1]}", f"v{u[0]}_{u[1]}") for v, u in removed
    }
    assert edges(red) <= edges(full)


def test_json_export():
    js = to_json(build_graph(build_nest(F(3, 7))))
    assert js["bottom"] == [1, 0]
    assert js["edges"][0] == {"from": [1, 0], "to": [0, 0], "multiplicity": 3}
