import itertools
import random

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairmatch.generate import blow_up, random_instance, random_pattern
from fairmatch.reductions import MccInstance, reduce_mcc
from fairmatch.structure import (FORGET, INTRODUCE, JOIN, LEAF, TreeDecomposition, degree_stats,
                                 exact_treewidth_order, feedback_edge_indices, feedback_edge_set,
                                 make_nice, min_fill_order, order_width, read_pace, td_from_order,
                                 tree_decomposition, tree_decomposition_of, treedepth_exact_of,
                                 treedepth_exact_small, treedepth_upper, treedepth_upper_of,
                                 twin_partition, validate_nice, validate_td, write_pace)

from _builders import complete, four_cycle, inst, path, single_edge


def nx_graph(i):
    g = nx.Graph()
    g.add_nodes_from(range(i.nu + i.nv))
    g.add_edges_from((x, y) for x, ys in enumerate(i.graph_adj) for y in ys)
    return g


def adj_of(g: nx.Graph):
    idx = {x: k for k, x in enumerate(g)}
    return [[idx[y] for y in g[x]] for x in g]


class TestFeedbackEdges:
    def test_tree(self):
        assert feedback_edge_set(path(4)) == []

    def test_four_cycle(self):
        assert len(feedback_edge_set(four_cycle())) == 1

    def test_k23(self):
        # frozen from exhaustive edge-removal search
        assert len(feedback_edge_set(complete(2, 3))) == 2

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 10**6))
    def test_forest_after_removal(self, seed):
        i = random_instance(random.Random(seed), max_u=8, max_v=5)
        g = nx_graph(i)
        fes = set(feedback_edge_indices(i))
        assert len(fes) == g.number_of_edges() - g.number_of_nodes() + nx.number_connected_components(g)
        h = nx.Graph()
        h.add_nodes_from(g)
        nu = i.nu
        h.add_edges_from((a, nu + b) for k, (a, b) in enumerate(i.edge_index) if k not in fes)
        assert nx.is_forest(h)


class TestDegrees:
    def test_single_edge(self):
        assert degree_stats(single_edge()) == (1, 1)

    def test_k23(self):
        assert degree_stats(complete(2, 3)) == (3, 2)

    def test_clique_reduction(self):
        mcc = MccInstance(2, 1, (((1, 1), (2, 1)),))
        assert degree_stats(reduce_mcc(mcc))[0] == 2


class TestTwins:
    def test_k23(self):
        assert twin_partition(complete(2, 3)).nd == 2

    def test_path(self):
        part = twin_partition(path(2))
        assert sorted(c.members for c in part.classes) == [("u0", "u1"), ("v0",)]

    def test_isolated_vertex_rejected(self):
        with pytest.raises(ValueError):
            twin_partition(inst(1, [("u0", 0)], [("v0", 0), ("v1", 0)], [("u0", "v0")]))

    @pytest.mark.parametrize("seed", range(10))
    def test_blow_up_keeps_class_count(self, seed):
        rng = random.Random(seed)
        pattern = random_pattern(rng, size=3)
        big = blow_up(rng, pattern, 10, 10).instance
        # brute-force pairwise neighbourhood comparison on the pattern
        adj = pattern.graph_adj
        reps = []
        for x in range(len(adj)):
            if not any(set(adj[x]) == set(adj[r]) and (x < pattern.nu) == (r < pattern.nu) for r in reps):
                reps.append(x)
        assert twin_partition(big).nd == len(reps)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10**6))
    def test_classes_are_exact(self, seed):
        i = random_instance(random.Random(seed), max_u=8, max_v=5, p=0.6)
        if any(not a for a in i.graph_adj):
            return
        adj = i.graph_adj
        part = twin_partition(i)
        name = {i.node_name(x): x for x in range(len(adj))}
        reps = []
        for cls in part.classes:
            xs = [name[m] for m in cls.members]
            assert all(set(adj[x]) == set(adj[xs[0]]) for x in xs)
            reps.append(set(adj[xs[0]]))
        for a, b in itertools.combinations(range(len(reps)), 2):
            same_side = part.classes[a].side == part.classes[b].side
            assert not (same_side and reps[a] == reps[b])


class TestTreeDecomposition:
    def test_tree_width_one(self):
        assert tree_decomposition(path(5)).width == 1

    def test_four_cycle_width_two(self):
        assert tree_decomposition(four_cycle()).width == 2

    def test_grid_exact_width_three(self):
        # frozen from exhaustive elimination-order search over all 9! orders
        g = nx.grid_2d_graph(3, 3)
        adj = adj_of(g)
        td = tree_decomposition_of(adj, exact=True)
        assert td.width == 3 and validate_td(td, adj) == []

    def test_exact_not_worse_than_min_fill(self):
        rng = random.Random(7)
        for _ in range(20):
            g = nx.gnp_random_graph(10, 0.35, seed=rng.randrange(10**6))
            adj = adj_of(g)
            assert order_width(adj, exact_treewidth_order(adj)) <= order_width(adj, min_fill_order(adj))

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 10**6))
    def test_decompositions_are_valid(self, seed):
        i = random_instance(random.Random(seed), max_u=10, max_v=6, p=0.4)
        adj = i.graph_adj
        for exact in (False, True):
            td = tree_decomposition(i, exact=exact)
            assert validate_td(td, adj) == []
            ntd = make_nice(td)
            assert validate_nice(ntd, adj) == []

    def test_validator_catches_missing_edge(self):
        adj = [[1], [0]]
        td = TreeDecomposition((frozenset({0}), frozenset({1})), ((0, 1),))
        assert any("edge" in p for p in validate_td(td, adj))

    def test_validator_catches_disconnected_occurrence(self):
        adj = [[], [], []]
        bags = (frozenset({0}), frozenset({1}), frozenset({0, 2}))
        td = TreeDecomposition(bags, ((0, 1), (1, 2)))
        assert any("disconnected" in p for p in validate_td(td, adj))

    def test_validator_catches_non_tree(self):
        td = TreeDecomposition((frozenset({0}), frozenset({0})), ())
        assert validate_td(td, [[]])

    def test_min_fill_tie_break_lowest_index(self):
        assert min_fill_order([[], [], []]) == [0, 1, 2]

    def test_td_from_order_width(self):
        adj = adj_of(nx.cycle_graph(6))
        assert td_from_order(adj, list(range(6))).width == 2


class TestNice:
    def test_single_edge_chain(self):
        i = single_edge()
        td = TreeDecomposition((frozenset({0, 1}),), ())
        ntd = make_nice(td)
        assert [n.kind for n in ntd.nodes] == [LEAF, INTRODUCE, INTRODUCE, FORGET, FORGET]
        assert ntd.nodes[-1].bag == frozenset()
        assert validate_nice(ntd, i.graph_adj) == []

    def test_four_cycle(self):
        i = four_cycle()
        ntd = make_nice(tree_decomposition(i))
        assert validate_nice(ntd, i.graph_adj) == []

    def test_join_nodes_on_star(self):
        adj = adj_of(nx.star_graph(3))
        ntd = make_nice(tree_decomposition_of(adj), root_choice=0)
        assert validate_nice(ntd, adj) == []
        for n in ntd.nodes:
            if n.kind == JOIN:
                assert all(ntd.nodes[c].bag == n.bag for c in n.children)

    def test_invalid_input_rejected(self):
        td = TreeDecomposition((frozenset({0}),), ())
        with pytest.raises(ValueError):
            make_nice(td, adj=[[1], [0]])

    def test_validator_flags_broken_arithmetic(self):
        ntd = make_nice(TreeDecomposition((frozenset({0, 1}),), ()))
        nodes = list(ntd.nodes)
        nodes[1] = nodes[1].__class__(INTRODUCE, frozenset({0, 1}), nodes[1].children, 0)
        assert validate_nice(ntd.__class__(tuple(nodes)))


class TestPace:
    def test_round_trip(self):
        i = complete(2, 3)
        td = tree_decomposition(i)
        text = write_pace(td, i.nu + i.nv)
        back, n = read_pace(text)
        assert n == 5 and back == td
        assert text.startswith(f"s td {len(td.bags)} {td.width + 1} 5")

    def test_comments_and_errors(self):
        td, n = read_pace("c hello\ns td 1 1 1\nb 1 1\n")
        assert n == 1 and td.bags == (frozenset({0}),)
        with pytest.raises(ValueError):
            read_pace("b 1 1\n")
        with pytest.raises(ValueError):
            read_pace("s td 2 1 1\nb 1 1\n")


def brute_td(g: nx.Graph) -> int:
    if g.number_of_nodes() == 0:
        return 0
    if not nx.is_connected(g):
        return max(brute_td(g.subgraph(c).copy()) for c in nx.connected_components(g))
    return 1 + min(brute_td(nx.restricted_view(g, [v], []).copy()) for v in g)


class TestTreeDepth:
    def test_single_vertex(self):
        assert treedepth_exact_of([[]]) == 1

    def test_path_four(self):
        # frozen from exhaustive root choice
        assert treedepth_exact_of(adj_of(nx.path_graph(4))) == 3

    def test_star(self):
        assert treedepth_exact_of(adj_of(nx.star_graph(5))) == 2

    def test_too_large(self):
        with pytest.raises(ValueError):
            treedepth_exact_of([[] for _ in range(21)])

    @pytest.mark.parametrize("seed", range(25))
    def test_matches_brute_force(self, seed):
        rng = random.Random(seed)
        g = nx.gnp_random_graph(rng.randint(1, 8), rng.choice([0.2, 0.4, 0.6]), seed=seed)
        adj = adj_of(g)
        exact = treedepth_exact_of(adj)
        assert exact == brute_td(g)
        assert treedepth_upper_of(adj) >= exact

    def test_instance_wrappers(self):
        i = path(3)  # path on 5 vertices
        assert treedepth_exact_small(i) == 3
        assert treedepth_upper(i) >= 3
