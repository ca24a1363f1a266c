import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accelbuild.errors import CycleError, MissingDependencyError
from accelbuild.graph import build_graph, dirty_set, schedule_waves, to_dot, topo_order
from accelbuild.workspace import PackageManifest

from oracles import all_topo_orders, longest_levels, reachable_dependents


def pkgs(spec):
    """{'a': ['b']} -> manifests where a depends on b."""
    return [PackageManifest(name, "source", depends=tuple(deps)) for name, deps in spec.items()]


DIAMOND = {"a": [], "b": ["a"], "c": ["a"], "d": ["b", "c"]}


@st.composite
def dags(draw, max_nodes=7):
    pool = ["alpha", "beta", "core", "delta", "echo", "fw", "gamma", "hal", "io", "zeta"]
    names = draw(st.permutations(pool))[: draw(st.integers(0, max_nodes))]
    spec = {}
    for i, n in enumerate(names):
        spec[n] = draw(st.lists(st.sampled_from(names[:i]), unique=True, max_size=3)) if i else []
    return spec


def test_build_graph_edges():
    g = build_graph(pkgs({"a": ["b"], "b": []}))
    assert g.nodes == {"a", "b"}
    assert g.edges == {("b", "a")}


def test_missing_dependency():
    with pytest.raises(MissingDependencyError) as exc:
        build_graph(pkgs({"a": ["a_missing"]}))
    assert (exc.value.package, exc.value.missing) == ("a", "a_missing")


def test_two_cycle():
    with pytest.raises(CycleError) as exc:
        build_graph(pkgs({"a": ["b"], "b": ["a"]}))
    assert exc.value.cycle == ["a", "b"]


def test_cycle_is_canonical_rotation():
    with pytest.raises(CycleError) as exc:
        build_graph(pkgs({"z": ["m"], "m": ["q"], "q": ["z"], "a": []}))
    assert exc.value.cycle[0] == "m"
    assert sorted(exc.value.cycle) == ["m", "q", "z"]


def test_topo_chain():
    assert topo_order(build_graph(pkgs({"a": ["b"], "b": ["c"], "c": []}))) == ["c", "b", "a"]


def test_topo_diamond_is_smallest_valid_order():
    g = build_graph(pkgs(DIAMOND))
    orders = all_topo_orders(g.nodes, g.edges)
    assert topo_order(g) == min(orders) == ["a", "b", "c", "d"]


def test_topo_empty():
    assert topo_order(build_graph([])) == []


def test_waves():
    g = build_graph(pkgs(DIAMOND))
    levels = longest_levels(g.nodes, g.edges)
    assert levels == {"a": 0, "b": 1, "c": 1, "d": 2}
    assert schedule_waves(g) == [{"a"}, {"b", "c"}, {"d"}]
    assert schedule_waves(build_graph(pkgs({"a": ["b"], "b": ["c"], "c": []}))) == [{"c"}, {"b"}, {"a"}]
    assert schedule_waves(build_graph(pkgs({"x": [], "y": []}))) == [{"x", "y"}]


@pytest.mark.parametrize("changed, expected", [({"a"}, {"a", "b", "c", "d"}), ({"d"}, {"d"}), (set(), set())])
def test_dirty_set_diamond(changed, expected):
    g = build_graph(pkgs(DIAMOND))
    assert dirty_set(g, changed) == expected == reachable_dependents(g.nodes, g.edges, changed)


def test_dirty_set_unknown_name():
    with pytest.raises(MissingDependencyError):
        dirty_set(build_graph(pkgs(DIAMOND)), {"nope"})


def test_dot_output():
    g = build_graph(pkgs({"b": ["a"], "a": []}))
    assert to_dot(g) == 'digraph workspace {\n  "a";\n  "b";\n  "a" -> "b";\n}\n'


@settings(max_examples=60)
@given(dags())
def test_topo_order_properties(spec):
    g = build_graph(pkgs(spec))
    order = topo_order(g)
    pos = {n: i for i, n in enumerate(order)}
    assert sorted(order) == sorted(g.nodes)
    assert all(pos[a] < pos[b] for a, b in g.edges)
    assert order == min(all_topo_orders(g.nodes, g.edges))
    assert topo_order(build_graph(pkgs(spec))) == order


@settings(max_examples=60)
@given(dags(max_nodes=10))
def test_wave_properties(spec):
    g = build_graph(pkgs(spec))
    waves = schedule_waves(g)
    levels = longest_levels(g.nodes, g.edges)
    for k, wave in enumerate(waves):
        assert wave == {n for n, lv in levels.items() if lv == k}
        assert not any(a in wave and b in wave for a, b in g.edges)
    flat = [n for wave in waves for n in sorted(wave)]
    assert sorted(flat) == sorted(g.nodes)
    pos = {n: i for i, n in enumerate(flat)}
    assert all(pos[a] < pos[b] for a, b in g.edges)


@settings(max_examples=60)
@given(dags(max_nodes=10), st.data())
def test_dirty_set_matches_reachability_and_is_monotone(spec, data):
    g = build_graph(pkgs(spec))
    names = sorted(g.nodes)
    small = set(data.draw(st.lists(st.sampled_from(names), unique=True))) if names else set()
    big = small | (set(data.draw(st.lists(st.sampled_from(names), unique=True))) if names else set())
    assert dirty_set(g, small) == reachable_dependents(g.nodes, g.edges, small)
    assert dirty_set(g, small) <= dirty_set(g, big)


def test_restrict_keeps_dependencies():
    g = build_graph(pkgs(DIAMOND | {"e": []}))
    sub = g.restrict({"b"})
    assert sub.nodes == {"a", "b"}
    assert sub.edges == {("a", "b")}


def test_random_cycles_always_detected():
    rng = random.Random(7)
    for _ in range(50):
        names = [f"n{i}" for i in range(rng.randint(2, 6))]
        spec = {n: [] for n in names}
        ring = rng.sample(names, rng.randint(2, len(names)))
        for a, b in zip(ring, ring[1:] + ring[:1]):
            spec[a].append(b)
        with pytest.raises(CycleError):
            build_graph(pkgs(spec))
