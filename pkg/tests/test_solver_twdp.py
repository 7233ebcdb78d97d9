import random

import pytest

from fairmatch.core import verify_matching
from fairmatch.generate import random_instance
from fairmatch.oracle import solve_bruteforce
from fairmatch.solver_twdp import EMPTY_STATE, OUT, UNMATCHED, StateCapExceeded, TwdpSolver, solve_twdp
from fairmatch.structure import TreeDecomposition, make_nice, tree_decomposition, validate_td

from _builders import complete, inst, path


def test_tree_matches_oracle():
    rng = random.Random(1)
    for _ in range(60):
        nu = rng.randint(1, 8)
        u = [(f"u{i}", rng.randrange(2)) for i in range(nu)]
        v = [(f"v{j}", rng.randint(0, 1)) for j in range(rng.randint(1, 4))]
        edges = {(a, rng.choice(v)[0]) for a, _ in u}
        i = inst(2, u, v, sorted(edges))
        td = tree_decomposition(i)
        assert td.width <= 1
        assert (solve_twdp(i) is None) == (solve_bruteforce(i) is None)


def test_empty_instance():
    m = solve_twdp(inst(1, [], [], []))
    assert m is not None and len(m) == 0


def test_isolated_u():
    assert solve_twdp(inst(1, [("u", 0)], [("v", 0)], [])) is None


def test_introduce_u():
    i = inst(1, [("u", 0)], [("v", 0)], [("u", "v")])
    s = TwdpSolver(i)
    child = {((), ((0,),)): None}
    out = s.transition_introduce(child, (1,), 0)
    assert set(out) == {((UNMATCHED,), ((0,),)), ((1,), ((0,),))}


def test_introduce_v_starts_at_zero():
    i = inst(2, [("u", 0)], [("v", 0)], [("u", "v")])
    s = TwdpSolver(i)
    out = s.transition_introduce({EMPTY_STATE: None}, (), 1)
    assert set(out) == {((), ((0, 0),))}


def test_introduce_then_forget_isolated_u_dies():
    i = inst(1, [("u", 0)], [], [])
    s = TwdpSolver(i)
    table = s.transition_introduce({EMPTY_STATE: None}, (), 0)
    assert s.transition_forget(table, (0,), 0) == {}


def test_forget_u_increments_load():
    i = inst(2, [("u", 1)], [("v", 0)], [("u", "v")])
    s = TwdpSolver(i)
    out = s.transition_forget({((1,), ((0, 0),)): None}, (0, 1), 0)
    assert set(out) == {((), ((0, 1),))}


def test_forget_v_with_nothing():
    i = inst(1, [], [("v", 0)], [])
    s = TwdpSolver(i)
    assert set(s.transition_forget({((), ((0,),)): None}, (0,), 0)) == {EMPTY_STATE}


def test_forget_v_star_only_full_subset_survives():
    i = inst(2, [("a", 0), ("b", 1)], [("v", 0)], [("a", "v"), ("b", "v")])
    s = TwdpSolver(i)
    table = {EMPTY_STATE: None}
    table = s.transition_introduce(table, (), 2)
    table = s.transition_introduce(table, (2,), 0)
    table = s.transition_introduce(table, (0, 2), 1)
    out = s.transition_forget(table, (0, 1, 2), 2)
    matched = {x for x, _ in out if UNMATCHED not in x}
    assert matched == {(OUT, OUT)}
    assert all(x in {(OUT, OUT), (UNMATCHED, UNMATCHED)} for x, _ in out)


def _branch(s, u):
    table = s.transition_introduce({EMPTY_STATE: None}, (), 2)
    table = s.transition_introduce(table, (2,), u)
    return s.transition_forget(table, tuple(sorted((u, 2))), u)


def test_join_sums_loads():
    i = inst(1, [("a", 0), ("b", 0)], [("v", 0)], [("a", "v"), ("b", "v")])
    s = TwdpSolver(i)
    out = s.transition_join(_branch(s, 0), _branch(s, 1))
    assert ((), ((2,),)) in out


def test_join_identity_with_zero_state():
    i = inst(1, [("a", 0), ("b", 0)], [("v", 0)], [("a", "v"), ("b", "v")])
    s = TwdpSolver(i)
    left = _branch(s, 0)
    assert set(s.transition_join(left, {((), ((0,),)): None})) == set(left)


def test_rejects_foreign_decomposition():
    i = complete(2, 2)
    bad = make_nice(TreeDecomposition((frozenset({0, 1, 2}), frozenset({3})), ((0, 1),)))
    with pytest.raises(ValueError):
        solve_twdp(i, bad)


def test_state_cap_formula():
    i = complete(2, 1, colors=[0, 1], num_colors=2)
    s = TwdpSolver(i)
    assert s.state_cap((0, 1, 2)) == 3 ** 2 * (2 * 2)


def test_random_width_limited_matches_oracle():
    rng = random.Random(9)
    done = 0
    while done < 150:
        i = random_instance(rng, max_u=8, max_v=4, p=0.4)
        td = tree_decomposition(i)
        if td.width > 3:
            continue
        done += 1
        m = solve_twdp(i)
        assert (m is None) == (solve_bruteforce(i) is None)
        if m is not None:
            assert verify_matching(i, m).overall


def test_two_decompositions_same_verdict():
    rng = random.Random(4)
    for _ in range(40):
        i = random_instance(rng, max_u=7, max_v=4)
        adj = i.graph_adj
        a = tree_decomposition(i, exact=False)
        b = tree_decomposition(i, exact=True)
        assert validate_td(a, adj) == [] and validate_td(b, adj) == []
        ra = solve_twdp(i, make_nice(a, root_choice=0))
        rb = solve_twdp(i, make_nice(b, root_choice=len(b.bags) - 1))
        assert (ra is None) == (rb is None)


def test_path_yes():
    assert solve_twdp(path(5)) is not None
