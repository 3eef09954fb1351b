import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from cdrnet.generators import generate_uniform
from cdrnet.kcore import (CoreDecomposition, decompose, kcore_subgraph, naive_decompose,
                          read_core_numbers, write_core_numbers)

from . import oracles
from .conftest import complete, make_graph


def cores(d):
    return d.core_number.tolist()


@pytest.mark.parametrize("algo", [decompose, naive_decompose])
def test_triangle(algo, triangle):
    d = algo(triangle)
    assert cores(d) == [2, 2, 2] and d.k_max == 2


@pytest.mark.parametrize("algo", [decompose, naive_decompose])
def test_star(algo, star5):
    assert cores(algo(star5)) == [1] * 6


@pytest.mark.parametrize("algo", [decompose, naive_decompose])
def test_k4_pendant(algo, k4_pendant):
    # frozen from oracles.core_numbers
    assert cores(algo(k4_pendant)) == [3, 3, 3, 3, 1]


@pytest.mark.parametrize("algo", [decompose, naive_decompose])
def test_k4_and_triangle(algo):
    g = make_graph(7, complete(range(4)) + complete(range(4, 7)))
    d = algo(g)
    assert cores(d) == [3, 3, 3, 3, 2, 2, 2] and d.k_max == 3


@pytest.mark.parametrize("algo", [decompose, naive_decompose])
def test_empty_and_single_edge(algo):
    d = algo(make_graph(0, []))
    assert d.node_count == 0 and d.shells == {} and d.k_max == 0
    assert cores(algo(make_graph(2, [(0, 1)]))) == [1, 1]
    assert cores(algo(make_graph(3, []))) == [0, 0, 0]


def test_fixture_values_agree_with_oracle(k4_pendant, triangle, star5, k10_k4):
    for g in (k4_pendant, triangle, star5, k10_k4):
        assert cores(decompose(g)) == oracles.core_numbers(g.node_count, g.edges())


def test_shell_index():
    d = CoreDecomposition([2, 0, 2, 1, 2, 0])
    assert d.k_max == 2
    assert {k: v.tolist() for k, v in d.shells.items()} == {0: [1, 5], 1: [3], 2: [0, 2, 4]}
    assert d.shell_sizes().tolist() == [2, 1, 3]
    assert d.shell(7).tolist() == []


def all_graphs(n):
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(1 << len(pairs)):
        yield [p for i, p in enumerate(pairs) if mask >> i & 1]


@pytest.mark.parametrize("n", range(1, 6))
def test_exhaustive_small_graphs(n):
    for edges in all_graphs(n):
        g = make_graph(n, edges)
        assert decompose(g) == naive_decompose(g)


@pytest.mark.parametrize("seed", range(20))
def test_against_fixed_point_oracle(seed):
    rnd = random.Random(seed)
    n = rnd.randint(5, 40)
    pairs = list(itertools.combinations(range(n), 2))
    edges = rnd.sample(pairs, rnd.randint(0, len(pairs) // 2))
    g = make_graph(n, edges)
    assert cores(decompose(g)) == oracles.core_numbers(n, edges)


@settings(max_examples=150, deadline=None)
@given(n=st.integers(1, 16), data=st.data())
def test_core_properties(n, data):
    pairs = list(itertools.combinations(range(n), 2))
    edges = data.draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    g = make_graph(n, edges)
    d = decompose(g)
    adj = oracles.adjacency(n, edges)
    core = cores(d)
    deg = g.degrees().tolist()
    assert all(c <= dg for c, dg in zip(core, deg))
    assert sum(len(s) for s in d.shells.values()) == n
    assert not any(c > d.k_max for c in core)
    for k in range(d.k_max + 1):
        members = {v for v in range(n) if core[v] >= k}
        assert oracles.is_k_core(adj, members, k)
        # no single outside node can join while keeping min degree k
        for v in set(range(n)) - members:
            assert not oracles.is_k_core(adj, members | {v}, k)
        sub = kcore_subgraph(g, d, k)
        assert sub.node_count == len(members)
        if sub.node_count:
            assert sub.degrees().min() >= k
    assert not {v for v in range(n) if core[v] >= d.k_max + 1}


@pytest.mark.parametrize("seed", range(10))
def test_relabelling_permutes_core_numbers(seed):
    g = generate_uniform(30, 70, seed)
    rnd = random.Random(seed)
    perm = list(range(30))
    rnd.shuffle(perm)
    h = make_graph(30, [(perm[u], perm[v]) for u, v in g.edges()])
    cg, ch = cores(decompose(g)), cores(decompose(h))
    assert all(ch[perm[i]] == cg[i] for i in range(30))


def test_kcore_subgraph_examples(triangle):
    g = make_graph(7, complete(range(4)) + complete(range(4, 7)))
    d = decompose(g)
    sub = kcore_subgraph(g, d, 3)
    assert sub.node_count == 4 and sub.edges() == complete(range(4))
    assert sub.labels.tolist() == [0, 1, 2, 3]
    assert kcore_subgraph(g, d, 0).same_as(g)
    t = kcore_subgraph(triangle, decompose(triangle), 3)
    assert t.node_count == 0 and t.edge_count == 0


def test_decompose_scales_linearly_enough():
    g = generate_uniform(20_000, 80_000, 1)
    d = decompose(g)
    assert d.node_count == 20_000 and d.k_max >= 3


def test_core_number_file_round_trip(tmp_path, k4_pendant):
    d = decompose(k4_pendant)
    write_core_numbers(d, tmp_path / "c.txt")
    assert (tmp_path / "c.txt").read_text().splitlines() == ["0 3", "1 3", "2 3", "3 3", "4 1"]
    assert read_core_numbers(tmp_path / "c.txt") == d
