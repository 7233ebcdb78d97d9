"""Hardness gadget constructions: Multicolored Clique and Unary Bin Packing.

Both generators return an :class:`~fairmatch.core.Instance` with structured
vertex ids plus a provenance map naming the gadget that created each vertex.
Witness constructors build the fair matching that a yes-certificate of the
source problem induces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Optional, Sequence

from .core import Instance, Matching


class Builder:
    """Accumulates a colored bipartite graph with completion gadgets."""

    def __init__(self, num_colors: int):
        self.num_colors = num_colors
        self.u: dict[str, int] = {}
        self.v: dict[str, int] = {}
        self.adj: dict[str, list[str]] = {}  # v id -> u ids
        self.edges: list[tuple[str, str]] = []
        self.provenance: dict[str, str] = {}
        # hub v id -> list of (completion u id, pendant v id)
        self.completion: dict[str, list[tuple[str, str]]] = {}

    def add_u(self, uid: str, color: int, gadget: str) -> str:
        assert uid not in self.u and 0 <= color < self.num_colors, uid
        self.u[uid] = color
        self.provenance[uid] = gadget
        return uid

    def add_v(self, vid: str, threshold: int, gadget: str) -> str:
        assert vid not in self.v, vid
        self.v[vid] = threshold
        self.adj[vid] = []
        self.provenance[vid] = gadget
        return vid

    def connect(self, uid: str, vid: str) -> None:
        self.edges.append((uid, vid))
        self.adj[vid].append(uid)

    def missing_colors(self, vid: str) -> list[int]:
        present = {self.u[a] for a in self.adj[vid]}
        return [c for c in range(self.num_colors) if c not in present]

    def complete(self, vid: str, copies: int = 1) -> None:
        """Attach the missing-colour gadget: ``copies`` vertices per absent colour,
        each adjacent to ``vid`` and to a private pendant with threshold 1."""
        gadget = f"C[{vid}]"
        added = self.completion.setdefault(vid, [])
        for c in self.missing_colors(vid):
            for t in range(1, copies + 1):
                uid = self.add_u(f"{gadget}.u[c={c},t={t}]", c, gadget)
                pid = self.add_v(f"{gadget}.v[c={c},t={t}]", 1, gadget)
                self.connect(uid, vid)
                self.connect(uid, pid)
                added.append((uid, pid))

    def instance(self) -> Instance:
        return Instance.build(self.num_colors, self.u.items(), self.v.items(), self.edges)


def _finish_with_completion(b: Builder, assign: dict[str, str]) -> Matching:
    """Completion vertices join their hub when it is used, else their pendant."""
    used = set(assign.values())
    for hub, entries in b.completion.items():
        for uid, pid in entries:
            assign[uid] = hub if hub in used else pid
    missing = set(b.u) - set(assign)
    if missing:
        raise AssertionError(f"witness leaves {sorted(missing)[:3]} unmatched")
    return Matching.of(assign.items())


# -- Multicolored Clique ------------------------------------------------------

@dataclass(frozen=True)
class MccInstance:
    """``l`` parts of ``n`` vertices; edges ``((a, i), (b, j))``, 1-indexed, a != b."""

    l: int
    n: int
    edges: tuple[tuple[tuple[int, int], tuple[int, int]], ...]

    def __post_init__(self) -> None:
        for (a, i), (b, j) in self.edges:
            if a == b or not (1 <= a <= self.l and 1 <= b <= self.l
                              and 1 <= i <= self.n and 1 <= j <= self.n):
                raise ValueError(f"bad edge {((a, i), (b, j))}")

    @property
    def edge_set(self) -> frozenset:
        out = set()
        for (a, i), (b, j) in self.edges:
            out.add(((a, i), (b, j)))
            out.add(((b, j), (a, i)))
        return frozenset(out)

    def normalized_edges(self) -> list[tuple[int, int, int, int]]:
        """Each undirected edge once as ``(a, i, b, j)`` with a < b, sorted."""
        out = set()
        for (a, i), (b, j) in self.edges:
            out.add((a, i, b, j) if a < b else (b, j, a, i))
        return sorted(out)

    def is_clique(self, pick: Sequence[int]) -> bool:
        es = self.edge_set
        return len(pick) == self.l and all(
            ((a + 1, pick[a]), (b + 1, pick[b])) in es
            for a in range(self.l) for b in range(a + 1, self.l))

    def has_clique(self) -> bool:
        return any(self.is_clique(p) for p in product(range(1, self.n + 1), repeat=self.l))


@dataclass
class MccReduction:
    mcc: MccInstance
    builder: Builder
    instance: Instance
    hub_ab: list[str] = field(default_factory=list)


def _mcc_color(n: int, a: int, i: int) -> int:
    return (a - 1) * (n + 1) + i


def reduce_mcc_full(mcc: MccInstance) -> MccReduction:
    """Base graph H, one edge gadget per edge, missing-colour gadgets.

    Colours are (a, i), a in [l], i in [0, n].  Each hub ``v[a,b]`` sees
    ``U[a,b]`` (every colour outside {(b, 0..n)}), ``U[a,b,i]`` (colours
    (b, 0..i-1)) and edge-gadget blocks with colours (b, i..n); a hub with
    threshold 0 therefore certifies exactly one choice i per part.
    """
    l, n = mcc.l, mcc.n
    b = Builder((n + 1) * l)
    col = lambda a, i: _mcc_color(n, a, i)  # noqa: E731
    pairs = [(a, c) for a in range(1, l + 1) for c in range(1, l + 1) if a != c]
    v0 = b.add_v("v0", 0, "H")
    hubs = {(a, c): b.add_v(f"v[a={a},b={c}]", 0, "H") for a, c in pairs}
    vprime = {(a, i): b.add_v(f"v'[a={a},i={i}]", 0, "H")
              for a in range(1, l + 1) for i in range(1, n + 1)}
    for a in range(1, l + 1):
        for i in range(1, n + 1):
            b.connect(b.add_u(f"U0[a={a},i={i}]", col(a, i), "H"), v0)
    for a in range(1, l + 1):
        for i in range(1, n + 1):
            uid = b.add_u(f"Ua[a={a},i={i}]", col(a, 0), "H")
            b.connect(uid, v0)
            b.connect(uid, vprime[a, i])
    for a, c in pairs:
        for d in range(1, l + 1):
            if d == c:
                continue
            for i in range(0, n + 1):
                b.connect(b.add_u(f"Uab[a={a},b={c}].u[{d},{i}]", col(d, i), "H"), hubs[a, c])
        for i in range(1, n + 1):
            for t in range(0, i):
                uid = b.add_u(f"Uabi[a={a},b={c},i={i}].u[{t}]", col(c, t), "H")
                b.connect(uid, hubs[a, c])
                b.connect(uid, vprime[a, i])
    mids = []
    for a, i, c, j in mcc.normalized_edges():
        gname = f"H[a={a},b={c},i={i},j={j}]"
        mid = b.add_v(f"{gname}.v2", 0, gname)
        mids.append(mid)
        for t in range(i, n + 1):
            uid = b.add_u(f"{gname}.uab[{t}]", col(c, t), gname)
            b.connect(uid, hubs[a, c])
            b.connect(uid, mid)
        for t in range(j, n + 1):
            uid = b.add_u(f"{gname}.uba[{t}]", col(a, t), gname)
            b.connect(uid, mid)
            b.connect(uid, hubs[c, a])
    for vid in list(vprime.values()) + mids:
        b.complete(vid, 1)
    return MccReduction(mcc, b, b.instance(), list(hubs.values()))


def reduce_mcc(mcc: MccInstance) -> Instance:
    return reduce_mcc_full(mcc).instance


def mcc_witness(mcc: MccInstance, clique: Sequence[int]) -> Matching:
    """Fair matching induced by a multicolored clique ``clique[a-1] = i_a``."""
    if not mcc.is_clique(clique):
        raise ValueError(f"{tuple(clique)} is not a multicolored clique")
    red = reduce_mcc_full(mcc)
    b = red.builder
    l, n = mcc.l, mcc.n
    pick = {a: clique[a - 1] for a in range(1, l + 1)}
    assign: dict[str, str] = {}
    for a in range(1, l + 1):
        for i in range(1, n + 1):
            assign[f"U0[a={a},i={i}]"] = "v0"
            assign[f"Ua[a={a},i={i}]"] = "v0" if i == pick[a] else f"v'[a={a},i={i}]"
    for a in range(1, l + 1):
        for c in range(1, l + 1):
            if a == c:
                continue
            hub = f"v[a={a},b={c}]"
            for d in range(1, l + 1):
                if d != c:
                    for i in range(0, n + 1):
                        assign[f"Uab[a={a},b={c}].u[{d},{i}]"] = hub
            for i in range(1, n + 1):
                for t in range(0, i):
                    assign[f"Uabi[a={a},b={c},i={i}].u[{t}]"] = hub if i == pick[a] else f"v'[a={a},i={i}]"
    for a, i, c, j in mcc.normalized_edges():
        gname = f"H[a={a},b={c},i={i},j={j}]"
        chosen = i == pick[a] and j == pick[c]
        for t in range(i, n + 1):
            assign[f"{gname}.uab[{t}]"] = f"v[a={a},b={c}]" if chosen else f"{gname}.v2"
        for t in range(j, n + 1):
            assign[f"{gname}.uba[{t}]"] = f"v[a={c},b={a}]" if chosen else f"{gname}.v2"
    return _finish_with_completion(b, assign)


# -- Unary Bin Packing ------------------------------------------------------------

@dataclass(frozen=True)
class UbpInstance:
    items: tuple[int, ...]
    m: int
    B: int

    def __post_init__(self) -> None:
        if any(x < 1 for x in self.items) or self.m < 1 or self.B < 0:
            raise ValueError("items must be positive, m >= 1")
        if sum(self.items) != self.m * self.B:
            raise ValueError(f"sum of items {sum(self.items)} != m*B = {self.m * self.B}")

    def packings(self) -> Iterable[tuple[int, ...]]:
        """Every item-to-bin map (bins 1..m) whose bins all sum to B."""
        for bins in product(range(1, self.m + 1), repeat=len(self.items)):
            loads = [0] * self.m
            for x, j in zip(self.items, bins):
                loads[j - 1] += x
            if all(s == self.B for s in loads):
                yield bins

    def has_packing(self) -> bool:
        return next(iter(self.packings()), None) is not None


def _wrap(m: int, value: int) -> int:
    """1-indexed wrap-around into [m]."""
    return (value - 1) % m + 1


def gadget_colors(m: int, l: int) -> tuple[int, int, int]:
    """Colours (1-indexed) of the u_i, u'_{i>=2} and u'_1 / u'''_j chains of H1[k, l].

    The three must be distinct.  Within [m] that needs m >= 3; for m = 2 the
    third colour is m + 1.
    """
    third = _wrap(m, l + 2) if m >= 3 else m + 1
    return l, _wrap(m, l + 1), third


@dataclass
class UbpReduction:
    ubp: UbpInstance
    builder: Builder
    instance: Instance


def _add_h1(b: Builder, hub: str, k: int, l: int, m: int, tag: str) -> None:
    """Gadget H1[k, l] with its v-hat identified with ``hub``."""
    c_main, c_next, c_skip = (c - 1 for c in gadget_colors(m, l))
    g = f"H1[{tag},k={k},l={l}]"
    u = {i: b.add_u(f"{g}.u[{i}]", c_main, g) for i in range(1, k + 1)}
    up = {i: b.add_u(f"{g}.u'[{i}]", c_skip if i == 1 else c_next, g) for i in range(1, k + 1)}
    u2 = {j: b.add_u(f"{g}.u''[{j}]", c_main, g) for j in range(1, k - 1)}
    u3 = {j: b.add_u(f"{g}.u'''[{j}]", c_skip, g) for j in range(1, k - 1)}
    vv = {i: b.add_v(f"{g}.v[{i}]", 0, g) for i in range(1, k + 1)}
    # k = 1 keeps a v'_1 so that u'_1 has the alternative v'_2 gives it for k >= 2
    vp = {i: b.add_v(f"{g}.v'[{i}]", 0, g) for i in (range(2, k + 1) if k >= 2 else [1])}
    v2 = {j: b.add_v(f"{g}.v''[{j}]", 0, g) for j in range(2, k)}
    for i in range(1, k + 1):
        b.connect(u[i], hub)
        b.connect(u[i], vv[i])
        b.connect(up[i], vv[i])
    for i in range(2, k + 1):
        b.connect(up[i], vp[i])
    b.connect(up[1], vp[2] if k >= 2 else vp[1])
    for j in range(1, k - 1):
        b.connect(u2[j], vp[j + 1])
        b.connect(u2[j], v2[j + 1])
        b.connect(u3[j], v2[j + 1])
        b.connect(u3[j], vp[j + 2])
    for vid in list(vv.values()) + list(vp.values()) + list(v2.values()):
        b.complete(vid, 1)


def reduce_ubp_full(ubp: UbpInstance) -> UbpReduction:
    m, B = ubp.m, ubp.B
    b = Builder(m + 1)
    extra = m  # 0-indexed colour m + 1
    v0 = b.add_v("v0", 0, "H")
    for t in range(1, B + 1):
        b.connect(b.add_u(f"X[{t}]", extra, "H"), v0)
    hubs = {}
    for i, x in enumerate(ubp.items, start=1):
        ys = [b.add_u(f"Y[i={i}].u[{t}]", extra, "H") for t in range(1, (m - 1) * x + 1)]
        for j in range(1, m + 1):
            hub = hubs[i, j] = b.add_v(f"v[i={i},j={j}]", 0, "H")
            for t in range(1, x + 1):
                uid = b.add_u(f"X[i={i},j={j}].u[{t}]", j - 1, "H")
                b.connect(uid, v0)
                b.connect(uid, hub)
            for uid in ys:
                b.connect(uid, hub)
    for (i, j), hub in hubs.items():
        x = ubp.items[i - 1]
        _add_h1(b, hub, x, _wrap(m, j + 1), m, f"i={i},j={j}")
        b.complete(hub, x)
    return UbpReduction(ubp, b, b.instance())


def reduce_ubp(ubp: UbpInstance) -> Instance:
    return reduce_ubp_full(ubp).instance


def ubp_witness(ubp: UbpInstance, bins: Sequence[Iterable[int]]) -> Matching:
    """Fair matching induced by a packing; ``bins[j-1]`` lists the 1-indexed items in bin j."""
    m = ubp.m
    if len(bins) != m:
        raise ValueError(f"expected {m} bins")
    where: dict[int, int] = {}
    for j, content in enumerate(bins, start=1):
        for i in content:
            if i in where or not 1 <= i <= len(ubp.items):
                raise ValueError(f"item {i} misplaced")
            where[i] = j
    if len(where) != len(ubp.items):
        raise ValueError("not every item is packed")
    for j, content in enumerate(bins, start=1):
        if sum(ubp.items[i - 1] for i in content) != ubp.B:
            raise ValueError(f"bin {j} does not sum to {ubp.B}")
    red = reduce_ubp_full(ubp)
    assign: dict[str, str] = {}
    for t in range(1, ubp.B + 1):
        assign[f"X[{t}]"] = "v0"
    for i, x in enumerate(ubp.items, start=1):
        home = where[i]
        others = [j for j in range(1, m + 1) if j != home]
        for j in range(1, m + 1):
            for t in range(1, x + 1):
                assign[f"X[i={i},j={j}].u[{t}]"] = "v0" if j == home else f"v[i={i},j={j}]"
        for s, j in enumerate(others):
            for t in range(1, x + 1):
                assign[f"Y[i={i}].u[{s * x + t}]"] = f"v[i={i},j={j}]"
        for j in range(1, m + 1):
            g = f"H1[i={i},j={j},k={x},l={_wrap(m, j + 1)}]"
            active = j != home  # hub takes u_1..u_k
            for t in range(1, x + 1):
                assign[f"{g}.u[{t}]"] = f"v[i={i},j={j}]" if active else f"{g}.v[{t}]"
            for t in range(2, x + 1):
                assign[f"{g}.u'[{t}]"] = f"{g}.v'[{t}]" if active else f"{g}.v[{t}]"
            if active:
                assign[f"{g}.u'[1]"] = f"{g}.v'[2]" if x >= 2 else f"{g}.v'[1]"
            else:
                assign[f"{g}.u'[1]"] = f"{g}.v[1]"
            for t in range(1, x - 1):
                assign[f"{g}.u''[{t}]"] = f"{g}.v'[{t + 1}]" if active else f"{g}.v''[{t + 1}]"
                assign[f"{g}.u'''[{t}]"] = f"{g}.v'[{t + 2}]" if active else f"{g}.v''[{t + 1}]"
    return _finish_with_completion(red.builder, assign)


# -- structural helpers ------------------------------------------------------------

def forest_after_deleting(inst: Instance, drop_v: Iterable[str]) -> Optional[int]:
    """Delete V vertices; return the max over trees of the smallest rooted height
    (in edges), or ``None`` when a cycle remains."""
    gone = {inst.v_index[v] + inst.nu for v in drop_v}
    adj = [[y for y in nbrs if y not in gone] if x not in gone else []
           for x, nbrs in enumerate(inst.graph_adj)]
    n = len(adj)
    seen = [False] * n
    worst = 0
    for s in range(n):
        if seen[s] or s in gone:
            continue
        comp = [s]
        seen[s] = True
        edges = 0
        for x in comp:
            for y in adj[x]:
                edges += 1
                if not seen[y]:
                    seen[y] = True
                    comp.append(y)
        if edges // 2 != len(comp) - 1:
            return None
        worst = max(worst, _tree_radius(adj, comp))
    return worst


def _tree_radius(adj, comp) -> int:
    def farthest(src):
        dist = {src: 0}
        order = [src]
        for x in order:
            for y in adj[x]:
                if y not in dist:
                    dist[y] = dist[x] + 1
                    order.append(y)
        far = order[-1]
        return far, dist[far]
    a, _ = farthest(comp[0])
    _, diameter = farthest(a)
    return (diameter + 1) // 2
