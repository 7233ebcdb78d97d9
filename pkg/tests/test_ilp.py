import itertools
import random

import pytest

from fairmatch.generate import random_instance
from fairmatch.ilp import (BINARY, EnumerationLimit, IlpModel, build_ilp1, build_ilp2, dual_graph,
                          enumerate_feasible, export_lp, format_lp, merged_dual_graph, parse_lp,
                          structural_report)
from fairmatch.oracle import solve_bruteforce
from fairmatch.solver_smallk import ilp1_feasible

from _builders import complete, single_edge


def test_counts_single_edge():
    m = build_ilp2(single_edge())
    assert (len(m.rows), len(m.columns)) == (4, 3)


def test_counts_k23():
    m = build_ilp2(complete(2, 3, num_colors=2))
    assert (len(m.rows), len(m.columns)) == (2 + 3 + 12, 6 + 6)


def test_column_kinds_and_bounds():
    i = complete(2, 3, num_colors=2)
    m = build_ilp2(i)
    for col in m.columns:
        if col.name.startswith("x_"):
            assert col.kind == BINARY
        else:
            assert (col.lower, col.upper) == (0, 2)


def test_edgeless_dual():
    m = IlpModel()
    a = m.add_column("a", 0, 1)
    b = m.add_column("b", 0, 1)
    m.add_row("r1", {a: 1}, "<=", 1)
    m.add_row("r2", {b: 1}, "<=", 1)
    assert dual_graph(m).edges == set()


def test_single_edge_dual():
    m = build_ilp2(single_edge())
    d = dual_graph(m)
    named = {frozenset((d.labels[a], d.labels[b])) for a, b in d.edges}
    assert named == {frozenset(p) for p in [("assign_0", "lo_0_0"), ("assign_0", "hi_0_0"),
                                             ("spread_0", "lo_0_0"), ("spread_0", "hi_0_0"),
                                             ("lo_0_0", "hi_0_0")]}


def test_k23_dual_matches_raw_supports():
    m = build_ilp2(complete(2, 3, colors=[0, 1], num_colors=2))
    supports = [{k for k, _ in r.coeffs} for r in m.rows]
    expected = {(a, b) for a, b in itertools.combinations(range(len(supports)), 2)
                if supports[a] & supports[b]}
    assert dual_graph(m).edges == expected


def test_single_edge_blowup_clique():
    i = single_edge()
    merged = merged_dual_graph(build_ilp2(i))
    pos = {g: k for k, g in enumerate(merged.labels)}
    assert pos[("vc", 0, 0)] in merged.adj[pos[("v", 0)]]
    rep = structural_report(i)
    assert rep.norm_inf == 1 and rep.stable_set and rep.blowup_subgraph and rep.td_ok


@pytest.mark.parametrize("seed", range(20))
def test_structure_on_random(seed):
    i = random_instance(random.Random(seed), max_u=5, max_v=4)
    rep = structural_report(i, td_limit=22)
    assert rep.norm_inf == 1 and rep.stable_set and rep.blowup_subgraph
    assert rep.td_ok in (True, None)


def test_empty_model_export():
    assert format_lp(IlpModel(name="e")) == "\\ e\nMinimize\n obj:\nSubject To\nEnd\n"


def test_single_edge_export(tmp_path):
    m = build_ilp2(single_edge())
    path = tmp_path / "m.lp"
    export_lp(m, path)
    text = path.read_text()
    body = text.split("Subject To\n")[1].split("Bounds")[0]
    assert len(body.strip().splitlines()) == 4
    assert parse_lp(text).same_as(m)


@pytest.mark.parametrize("seed", range(15))
def test_round_trip(seed):
    i = random_instance(random.Random(seed))
    for m in (build_ilp2(i), build_ilp1(i)):
        assert parse_lp(format_lp(m)).same_as(m)


def test_export_deterministic():
    i = random_instance(random.Random(3))
    assert format_lp(build_ilp2(i)) == format_lp(build_ilp2(i))


@pytest.mark.parametrize("seed", range(40))
def test_ilp2_feasibility_equals_oracle(seed):
    i = random_instance(random.Random(seed), max_u=6, max_v=3)
    sol = enumerate_feasible(build_ilp2(i))
    assert (sol is None) == (solve_bruteforce(i) is None)
    if sol is not None:
        assert build_ilp2(i).satisfied(sol)


@pytest.mark.parametrize("seed", range(30))
def test_ilp1_model_equals_search(seed):
    i = random_instance(random.Random(seed), max_u=6, max_v=3)
    sol = enumerate_feasible(build_ilp1(i))
    assert (sol is None) == (ilp1_feasible(i) is None)


def test_enumeration_limit():
    with pytest.raises(EnumerationLimit):
        enumerate_feasible(build_ilp2(complete(6, 3, colors=[0, 0, 0, 1, 1, 2], num_colors=3)), limit=5)
