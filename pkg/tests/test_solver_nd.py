import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairmatch.core import Matching, color_histogram, verify_matching
from fairmatch.generate import blow_up_to, random_instance, random_pattern
from fairmatch.oracle import solve_bruteforce
from fairmatch.solver_nd import build_quotient, expand_matching, preprocess, solve_nd, split_class_loads
from fairmatch.solver_smallk import solve_smallk
from fairmatch.structure import twin_partition

from _builders import complete, inst


class TestPreprocess:
    def test_k2_within_threshold(self):
        pre = preprocess(inst(2, [("u", 0)], [("v", 1)], [("u", "v")]))
        assert pre.forced == (("u", "v"),) and not pre.early_no

    def test_k2_unfair(self):
        assert preprocess(inst(2, [("u", 0)], [("v", 0)], [("u", "v")])).early_no

    def test_k2_single_color(self):
        pre = preprocess(inst(1, [("u", 0)], [("v", 0)], [("u", "v")]))
        assert pre.forced == (("u", "v"),) and not pre.early_no

    def test_isolated_u(self):
        assert preprocess(inst(1, [("u", 0)], [("v", 0)], [])).early_no

    def test_isolated_v_dropped(self):
        pre = preprocess(inst(1, [("u", 0), ("w", 0)], [("v", 0), ("x", 0)], [("u", "v"), ("w", "v")]))
        assert [vid for vid, _ in pre.reduced.v] == ["v"]


class TestQuotient:
    def test_k23_single_class(self):
        q = build_quotient(complete(2, 3, limits=[1, 1, 1]))
        assert q.inner.nv == 1 and q.inner.v[0][1] == 3

    def test_two_stars(self):
        i = inst(1, [("a", 0), ("b", 0), ("c", 0), ("d", 0)], [("x", 1), ("y", 2), ("z", 4)],
                 [("a", "x"), ("b", "x"), ("a", "y"), ("b", "y"), ("c", "z"), ("d", "z")])
        q = build_quotient(i)
        assert sorted(l for _, l in q.inner.v) == [3, 4]

    @pytest.mark.parametrize("seed", range(15))
    def test_class_count_matches_twin_partition(self, seed):
        rng = random.Random(seed)
        b = blow_up_to(rng, random_pattern(rng))
        q = build_quotient(b.instance)
        assert q.inner.nv == len(twin_partition(b.instance).side("V"))
        for name, members in q.mapping.items():
            assert q.inner.v[q.inner.v_index[name]][1] == sum(l for _, l in members)


class TestSplit:
    def test_worked_example(self):
        # counts (6, 5) over thresholds (1, 3): q = (1, 1), r = (2, 1)
        assert split_class_loads([6, 5], [1, 3]) == [[2, 2], [4, 3]]

    def test_single_member_identity(self):
        assert split_class_loads([4, 7, 2], [5]) == [[4, 7, 2]]

    def test_zero_total(self):
        assert split_class_loads([3, 3], [0, 0]) == [[2, 2], [1, 1]]
        with pytest.raises(ValueError):
            split_class_loads([3, 2], [0, 0])

    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.integers(0, 4), min_size=1, max_size=4), st.integers(0, 6), st.integers(1, 4),
           st.integers(0, 20))
    def test_shares_fair_and_conserving(self, limits, base, ncolors, spread_seed):
        total = sum(limits)
        rng = random.Random(spread_seed)
        counts = [base + rng.randint(0, total) for _ in range(ncolors)]
        if total == 0:
            counts = [base] * ncolors
        elif max(counts) - min(counts) > total:
            return
        loads = split_class_loads(counts, limits)
        for c in range(ncolors):
            assert sum(row[c] for row in loads) == counts[c]
        for row, l in zip(loads, limits):
            assert max(row) - min(row) <= l


def test_expand_rejects_unfair_quotient():
    i = complete(2, 2, colors=[0, 1], num_colors=2)
    q = build_quotient(i)
    with pytest.raises(ValueError):
        expand_matching(q, Matching.of([("u0", q.inner.v[0][0])]), i)


def test_expand_preserves_class_loads():
    rng = random.Random(5)
    for _ in range(40):
        b = blow_up_to(rng, random_pattern(rng))
        pre = preprocess(b.instance)
        if pre.early_no:
            continue
        q = build_quotient(pre.reduced)
        mq = solve_smallk(q.inner)
        if mq is None:
            continue
        m = expand_matching(q, mq, pre.reduced)
        assert verify_matching(pre.reduced, m).overall
        for name, members in q.mapping.items():
            total = color_histogram(q.inner, mq, name)
            sums = [0] * q.inner.num_colors
            for vid, _ in members:
                for c, x in enumerate(color_histogram(pre.reduced, m, vid)):
                    sums[c] += x
            assert sums == total


def test_early_no():
    assert solve_nd(inst(2, [("u", 0)], [("v", 0)], [("u", "v")])) is None


@settings(max_examples=250, deadline=None)
@given(st.integers(0, 10**7))
def test_matches_oracle(seed):
    i = random_instance(random.Random(seed), max_u=8, max_v=6)
    m = solve_nd(i)
    assert (m is None) == (solve_bruteforce(i) is None)
    if m is not None:
        assert verify_matching(i, m).overall
