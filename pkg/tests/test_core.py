import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairmatch.core import (Instance, Matching, ParseError, color_histogram, instance_from_json,
                            instance_to_json, load_instance, matching_from_json, matching_to_json,
                            validate_instance, verify_matching)
from fairmatch.generate import random_instance
from fairmatch.oracle import solve_enumerate

from _builders import inst, single_edge, two_colors_one_v


def kinds(violations):
    return [v.kind for v in violations]


class TestValidate:
    def test_minimal_instance_is_valid(self):
        assert validate_instance(single_edge()) == []

    def test_dangling_endpoint(self):
        bad = inst(1, [("u0", 0)], [("v0", 0)], [("u0", "v9")])
        assert kinds(validate_instance(bad)) == ["dangling-endpoint"]

    def test_duplicate_edge(self):
        bad = inst(1, [("u0", 0)], [("v0", 0)], [("u0", "v0"), ("u0", "v0")])
        assert kinds(validate_instance(bad)) == ["duplicate-edge"]

    @pytest.mark.parametrize("bad, kind", [
        (inst(0, [], [], []), "num-colors"),
        (inst(1, [("u0", 1)], [], []), "color-out-of-range"),
        (inst(1, [], [("v0", -1)], []), "negative-threshold"),
        (inst(1, [("x", 0)], [("x", 0)], []), "id-collision"),
        (inst(1, [("a", 0), ("a", 0)], [], []), "duplicate-u"),
        (inst(1, [], [("b", 0), ("b", 0)], []), "duplicate-v"),
    ])
    def test_other_violations(self, bad, kind):
        assert kind in kinds(validate_instance(bad))

    def test_edge_from_v_side_is_dangling(self):
        bad = inst(1, [("u0", 0)], [("v0", 0)], [("v0", "u0")])
        assert "dangling-endpoint" in kinds(validate_instance(bad))


class TestHistogram:
    def test_single_pair(self):
        i = inst(2, [("u0", 0)], [("v0", 0)], [("u0", "v0")])
        assert color_histogram(i, Matching.of([("u0", "v0")]), "v0") == [1, 0]

    def test_empty_matching(self):
        assert color_histogram(two_colors_one_v(), Matching(), "v0") == [0, 0]

    def test_two_colors(self):
        m = Matching.of([("u0", "v0"), ("u1", "v0")])
        assert color_histogram(two_colors_one_v(), m, "v0") == [1, 1]

    def test_unknown_v(self):
        with pytest.raises(KeyError):
            color_histogram(single_edge(), Matching(), "nope")


class TestVerify:
    def test_balanced_pair_is_fair(self):
        rep = verify_matching(two_colors_one_v(), Matching.of([("u0", "v0"), ("u1", "v0")]))
        assert rep.overall and rep.left_perfect

    def test_missing_color_counts_as_zero(self):
        rep = verify_matching(single_edge(colors=2), Matching.of([("u0", "v0")]))
        assert rep.left_perfect and not rep.overall
        assert (rep.per_v[0].max_count, rep.per_v[0].min_count, rep.per_v[0].fair) == (1, 0, False)

    def test_single_color_always_balanced(self):
        assert verify_matching(single_edge(colors=1), Matching.of([("u0", "v0")])).overall

    def test_non_edge_reported(self):
        i = inst(1, [("u0", 0)], [("v0", 0), ("v1", 0)], [("u0", "v0")])
        rep = verify_matching(i, Matching.of([("u0", "v1")]))
        assert not rep.overall and rep.errors

    def test_double_assignment_not_left_perfect(self):
        i = inst(1, [("u0", 0)], [("v0", 5), ("v1", 5)], [("u0", "v0"), ("u0", "v1")])
        rep = verify_matching(i, Matching.of([("u0", "v0"), ("u0", "v1")]))
        assert not rep.left_perfect and not rep.overall

    def test_unmatched_u_not_left_perfect(self):
        assert not verify_matching(two_colors_one_v(l=5), Matching.of([("u0", "v0")])).left_perfect


def _relabel(i: Instance, perm) -> Instance:
    return Instance(i.num_colors, tuple((a, perm[c]) for a, c in i.u), i.v, i.edges)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_verdict_invariant_under_color_permutation(seed):
    rng = random.Random(seed)
    i = random_instance(rng, max_u=6, max_v=3)
    perm = list(range(i.num_colors))
    rng.shuffle(perm)
    m = solve_enumerate(i)
    j = _relabel(i, perm)
    if m is None:
        assert solve_enumerate(j) is None
    else:
        assert verify_matching(j, m).overall


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_extra_color_never_helps(seed):
    rng = random.Random(seed)
    i = random_instance(rng, max_u=6, max_v=3)
    wider = Instance(i.num_colors + 1, i.u, i.v, i.edges)
    m = solve_enumerate(wider)
    if m is not None:
        assert verify_matching(i, m).overall
    for p in verify_matching(wider, m or Matching()).per_v:
        assert p.max_count >= p.min_count


class TestJson:
    def test_round_trip(self, tmp_path):
        i = two_colors_one_v()
        path = tmp_path / "i.json"
        path.write_text(json.dumps(instance_to_json(i)))
        assert load_instance(path) == i
        m = Matching.of([("u1", "v0"), ("u0", "v0")])
        assert matching_from_json(matching_to_json(m)) == m

    def test_schema_field_names(self):
        doc = instance_to_json(single_edge())
        assert set(doc) == {"num_colors", "u", "v", "edges"}
        assert doc["u"] == [{"id": "u0", "color": 0}] and doc["v"] == [{"id": "v0", "l": 0}]
        assert doc["edges"] == [["u0", "v0"]]

    @pytest.mark.parametrize("doc", [{}, {"num_colors": 1, "u": [{"id": "a"}], "v": [], "edges": []}])
    def test_malformed(self, doc):
        with pytest.raises(ParseError):
            instance_from_json(doc)

    def test_unreadable_file(self, tmp_path):
        p = tmp_path / "x.json"
        p.write_text("{not json")
        with pytest.raises(ParseError):
            load_instance(p)


def test_solve_report_accepted_as_matching():
    m = Matching.of([("u0", "v0")])
    assert matching_from_json({"answer": "yes", "witness": matching_to_json(m)}) == m
