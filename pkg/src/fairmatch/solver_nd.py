"""Neighbourhood-diversity solver: contract V twin classes, solve the quotient, expand."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .core import Instance, Matching, is_fair, require_valid, verify_matching
from .solver_smallk import DEFAULT_K_LIMIT, solve_smallk
from .structure import twin_classes


@dataclass(frozen=True)
class Preprocessed:
    reduced: Instance
    forced: tuple[tuple[str, str], ...]
    early_no: bool


@dataclass(frozen=True)
class QuotientInstance:
    inner: Instance
    # quotient vertex id -> ordered original (v_id, L(v)), descending L
    mapping: dict[str, tuple[tuple[str, int], ...]]


def preprocess(inst: Instance) -> Preprocessed:
    """Drop isolated V vertices, settle K2 components, flag isolated U vertices."""
    require_valid(inst)
    adj_u, adj_v = inst.adj_u, inst.adj_v
    if any(not a for a in adj_u):
        return Preprocessed(inst, (), True)
    forced: list[tuple[str, str]] = []
    drop_u: set[int] = set()
    drop_v: set[int] = set()
    for j, nbrs in enumerate(adj_v):
        if not nbrs:
            drop_v.add(j)
        elif len(nbrs) == 1 and len(adj_u[nbrs[0]]) == 1:
            i = nbrs[0]
            counts = [0] * inst.num_colors
            counts[inst.colors[i]] = 1
            if not is_fair(counts, inst.thresholds[j]):
                return Preprocessed(inst, (), True)
            forced.append((inst.u[i][0], inst.v[j][0]))
            drop_u.add(i)
            drop_v.add(j)
    if not drop_u and not drop_v:
        return Preprocessed(inst, (), False)
    gone_u = {inst.u[i][0] for i in drop_u}
    gone_v = {inst.v[j][0] for j in drop_v}
    reduced = Instance(
        inst.num_colors,
        tuple(p for p in inst.u if p[0] not in gone_u),
        tuple(p for p in inst.v if p[0] not in gone_v),
        tuple(e for e in inst.edges if e[0] not in gone_u and e[1] not in gone_v),
    )
    return Preprocessed(reduced, tuple(forced), False)


def build_quotient(inst: Instance) -> QuotientInstance:
    """One quotient vertex per V twin class, threshold = sum of member thresholds."""
    nu = inst.nu
    v_classes = [members for side, members in twin_classes(inst) if side == "V"]
    names = [f"class[{k}]" for k in range(len(v_classes))]
    taken = set(inst.u_index)
    names = [n if n not in taken else f"{n}#" for n in names]
    v_new, edges, mapping = [], [], {}
    for name, members in zip(names, v_classes):
        js = sorted((x - nu for x in members), key=lambda j: (-inst.thresholds[j], j))
        mapping[name] = tuple(inst.v[j] for j in js)
        v_new.append((name, sum(inst.thresholds[j] for j in js)))
        for i in inst.adj_v[js[0]]:
            edges.append((inst.u[i][0], name))
    return QuotientInstance(Instance.build(inst.num_colors, inst.u, v_new, edges), mapping)


def split_class_loads(counts: Sequence[int], limits: Sequence[int]) -> list[list[int]]:
    """Split per-colour class loads over members with thresholds ``limits`` (in order).

    With total threshold T > 0 each count is written ``T*q + r``; member j gets
    ``q*limits[j]`` plus a greedy share of ``r`` filling ``limits`` in order.
    With T = 0 all counts are equal and are split into identical even shares.
    Returns ``loads[j][c]``.
    """
    s = len(limits)
    total = sum(limits)
    loads = [[0] * len(counts) for _ in range(s)]
    if total == 0:
        if len(set(counts)) > 1:
            raise ValueError("zero class threshold needs equal colour counts")
        q = counts[0] if counts else 0
        for j in range(s):
            share = q // s + (1 if j < q % s else 0)
            for c in range(len(counts)):
                loads[j][c] = share
        return loads
    for c, cnt in enumerate(counts):
        q, r = divmod(cnt, total)
        for j, lj in enumerate(limits):
            take = min(r, lj)
            r -= take
            loads[j][c] = q * lj + take
    return loads


def expand_matching(q: QuotientInstance, mq: Matching, original: Instance) -> Matching:
    """Map a quotient matching back onto the original class members."""
    inner = q.inner
    report = verify_matching(inner, mq)
    if not report.overall:
        raise ValueError("quotient matching is not L'-fair")
    ui = original.u_index
    by_class: dict[str, list[list[str]]] = {
        name: [[] for _ in range(inner.num_colors)] for name in q.mapping
    }
    for a, b in mq.pairs:
        by_class[b][original.colors[ui[a]]].append(a)
    pairs = []
    for name, members in q.mapping.items():
        buckets = by_class[name]
        for lst in buckets:
            lst.sort(key=ui.__getitem__)
        loads = split_class_loads([len(b) for b in buckets], [l for _, l in members])
        cursor = [0] * inner.num_colors
        for (vid, _), row in zip(members, loads):
            for c, cnt in enumerate(row):
                for a in buckets[c][cursor[c]:cursor[c] + cnt]:
                    pairs.append((a, vid))
                cursor[c] += cnt
    return Matching.of(pairs)


def solve_nd(inst: Instance, k_limit: Optional[int] = DEFAULT_K_LIMIT,
             emit_quotient: Optional[list] = None) -> Optional[Matching]:
    pre = preprocess(inst)
    if pre.early_no:
        return None
    if pre.reduced.nu == 0:
        return Matching.of(pre.forced)
    q = build_quotient(pre.reduced)
    if emit_quotient is not None:
        emit_quotient.append(q)
    mq = solve_smallk(q.inner, k_limit)
    if mq is None:
        return None
    m = Matching.of(expand_matching(q, mq, pre.reduced).pairs + pre.forced)
    assert verify_matching(inst, m).overall, "nd witness rejected"
    return m
