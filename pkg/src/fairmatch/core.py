"""Instances, matchings, fairness verification and the JSON file formats."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence


class InvalidInstance(ValueError):
    """Raised when an algorithm is handed an instance that fails validation."""


class ParseError(ValueError):
    """Raised for malformed instance or matching JSON."""


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.detail}"


@dataclass(frozen=True)
class Instance:
    """A colored bipartite graph with per-vertex fairness thresholds.

    ``u`` holds ``(id, color)`` pairs, ``v`` holds ``(id, threshold)`` pairs and
    ``edges`` holds ``(u_id, v_id)`` pairs.  Internally U vertices are indexed
    ``0..|U|-1`` and V vertices ``0..|V|-1`` in the order given.
    """

    num_colors: int
    u: tuple[tuple[str, int], ...]
    v: tuple[tuple[str, int], ...]
    edges: tuple[tuple[str, str], ...]

    @classmethod
    def build(
        cls,
        num_colors: int,
        u: Iterable[tuple[str, int]],
        v: Iterable[tuple[str, int]],
        edges: Iterable[tuple[str, str]],
    ) -> "Instance":
        return cls(
            int(num_colors),
            tuple((str(a), int(b)) for a, b in u),
            tuple((str(a), int(b)) for a, b in v),
            tuple((str(a), str(b)) for a, b in edges),
        )

    @property
    def nu(self) -> int:
        return len(self.u)

    @property
    def nv(self) -> int:
        return len(self.v)

    @cached_property
    def u_index(self) -> dict[str, int]:
        return {uid: i for i, (uid, _) in enumerate(self.u)}

    @cached_property
    def v_index(self) -> dict[str, int]:
        return {vid: j for j, (vid, _) in enumerate(self.v)}

    @cached_property
    def colors(self) -> list[int]:
        return [c for _, c in self.u]

    @cached_property
    def thresholds(self) -> list[int]:
        return [l for _, l in self.v]

    @cached_property
    def edge_index(self) -> list[tuple[int, int]]:
        """Edges as ``(u index, v index)``, in input order."""
        ui, vi = self.u_index, self.v_index
        return [(ui[a], vi[b]) for a, b in self.edges]

    @cached_property
    def adj_u(self) -> list[list[int]]:
        """Sorted V-neighbours of every U vertex."""
        adj: list[set[int]] = [set() for _ in range(self.nu)]
        for i, j in self.edge_index:
            adj[i].add(j)
        return [sorted(s) for s in adj]

    @cached_property
    def adj_v(self) -> list[list[int]]:
        """Sorted U-neighbours of every V vertex."""
        adj: list[set[int]] = [set() for _ in range(self.nv)]
        for i, j in self.edge_index:
            adj[j].add(i)
        return [sorted(s) for s in adj]

    @cached_property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edge_index)

    def neighbors_of_color(self, j: int, c: int) -> list[int]:
        cols = self.colors
        return [i for i in self.adj_v[j] if cols[i] == c]

    # graph view: U vertex i is node i, V vertex j is node nu + j
    def node_of_v(self, j: int) -> int:
        return self.nu + j

    def node_name(self, x: int) -> str:
        return self.u[x][0] if x < self.nu else self.v[x - self.nu][0]

    @cached_property
    def graph_adj(self) -> list[list[int]]:
        nu = self.nu
        adj = [list(map(lambda j: nu + j, a)) for a in self.adj_u]
        adj.extend(list(a) for a in self.adj_v)
        return adj


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[str, str], ...] = ()

    @classmethod
    def of(cls, pairs: Iterable[tuple[str, str]]) -> "Matching":
        return cls(tuple(sorted((str(a), str(b)) for a, b in pairs)))

    @classmethod
    def from_indices(cls, inst: Instance, pairs: Iterable[tuple[int, int]]) -> "Matching":
        return cls.of((inst.u[i][0], inst.v[j][0]) for i, j in pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def as_dict(self) -> dict[str, str]:
        return dict(self.pairs)


@dataclass(frozen=True)
class VertexFairness:
    v_id: str
    max_count: int
    min_count: int
    fair: bool


@dataclass(frozen=True)
class FairnessReport:
    left_perfect: bool
    per_v: tuple[VertexFairness, ...]
    overall: bool
    errors: tuple[str, ...] = field(default=())

    def to_json(self) -> dict:
        return {
            "overall": self.overall,
            "left_perfect": self.left_perfect,
            "errors": list(self.errors),
            "per_v": [
                {"v": p.v_id, "max": p.max_count, "min": p.min_count, "fair": p.fair}
                for p in self.per_v
            ],
        }


def validate_instance(inst: Instance) -> list[Violation]:
    out: list[Violation] = []
    if inst.num_colors < 1:
        out.append(Violation("num-colors", f"num_colors={inst.num_colors} < 1"))
    seen_u: set[str] = set()
    for uid, c in inst.u:
        if uid in seen_u:
            out.append(Violation("duplicate-u", uid))
        seen_u.add(uid)
        if not 0 <= c < inst.num_colors:
            out.append(Violation("color-out-of-range", f"{uid} has color {c}"))
    seen_v: set[str] = set()
    for vid, l in inst.v:
        if vid in seen_v:
            out.append(Violation("duplicate-v", vid))
        seen_v.add(vid)
        if vid in seen_u:
            out.append(Violation("id-collision", f"{vid} is both a U and a V id"))
        if l < 0:
            out.append(Violation("negative-threshold", f"{vid} has L={l}"))
    seen_e: set[tuple[str, str]] = set()
    for a, b in inst.edges:
        if a not in seen_u or b not in seen_v:
            out.append(Violation("dangling-endpoint", f"edge ({a},{b})"))
        if (a, b) in seen_e:
            out.append(Violation("duplicate-edge", f"edge ({a},{b})"))
        seen_e.add((a, b))
    return out


def require_valid(inst: Instance) -> None:
    problems = validate_instance(inst)
    if problems:
        raise InvalidInstance("; ".join(map(str, problems)))


def _histogram(inst: Instance, members: Iterable[int]) -> list[int]:
    counts = [0] * inst.num_colors
    cols = inst.colors
    for i in members:
        counts[cols[i]] += 1
    return counts


def color_histogram(inst: Instance, m: Matching, v: str) -> list[int]:
    if v not in inst.v_index:
        raise KeyError(f"unknown V vertex {v!r}")
    ui = inst.u_index
    return _histogram(inst, (ui[a] for a, b in m.pairs if b == v))


def is_fair(counts: Sequence[int], threshold: int) -> bool:
    return max(counts) - min(counts) <= threshold


def verify_matching(inst: Instance, m: Matching) -> FairnessReport:
    """Check left-perfectness and L-fairness of ``m`` (min/max over every color)."""
    errors: list[str] = []
    ui, vi = inst.u_index, inst.v_index
    assigned: dict[int, int] = {}
    repeated = False
    for a, b in m.pairs:
        if a not in ui or b not in vi:
            errors.append(f"unknown vertex in pair ({a},{b})")
            continue
        i, j = ui[a], vi[b]
        if (i, j) not in inst.edge_set:
            errors.append(f"pair ({a},{b}) is not an edge")
            continue
        if i in assigned:
            errors.append(f"{a} matched more than once")
            repeated = True
            continue
        assigned[i] = j
    left_perfect = len(assigned) == inst.nu and not repeated
    load: list[list[int]] = [[] for _ in range(inst.nv)]
    for i, j in assigned.items():
        load[j].append(i)
    per_v = []
    for j, (vid, lim) in enumerate(inst.v):
        h = _histogram(inst, load[j])
        hi, lo = max(h), min(h)
        per_v.append(VertexFairness(vid, hi, lo, hi - lo <= lim))
    overall = left_perfect and not errors and all(p.fair for p in per_v)
    return FairnessReport(left_perfect, tuple(per_v), overall, tuple(errors))


# -- JSON -------------------------------------------------------------------

def instance_to_json(inst: Instance) -> dict:
    return {
        "num_colors": inst.num_colors,
        "u": [{"id": a, "color": c} for a, c in inst.u],
        "v": [{"id": a, "l": l} for a, l in inst.v],
        "edges": [[a, b] for a, b in inst.edges],
    }


def instance_from_json(data: dict) -> Instance:
    try:
        return Instance.build(
            data["num_colors"],
            ((d["id"], d["color"]) for d in data["u"]),
            ((d["id"], d["l"]) for d in data["v"]),
            ((e[0], e[1]) for e in data["edges"]),
        )
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise ParseError(f"bad instance JSON: {exc!r}") from exc


def matching_to_json(m: Matching) -> dict:
    return {"pairs": [[a, b] for a, b in m.pairs]}


def matching_from_json(data: dict) -> Matching:
    if isinstance(data, dict) and isinstance(data.get("witness"), dict):
        data = data["witness"]  # a solve report
    try:
        return Matching.of((p[0], p[1]) for p in data["pairs"])
    except (KeyError, TypeError, IndexError) as exc:
        raise ParseError(f"bad matching JSON: {exc!r}") from exc


def _read_json(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def load_instance(path: str | Path) -> Instance:
    return instance_from_json(_read_json(path))


def load_matching(path: str | Path) -> Matching:
    return matching_from_json(_read_json(path))


def dump_json(obj: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1) + "\n", encoding="utf-8")
