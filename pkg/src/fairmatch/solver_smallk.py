"""Solver for few right-hand vertices: interval ILP search plus flow reconstruction.

The interval ILP has, for every ``v``, a per-color minimum load ``x_v`` and a
per-color maximum load ``y_v`` with ``0 <= y_v - x_v <= L(v)``, and for every
subset ``W`` of V::

    sum_{v in W} y_v >= max_c |nu_c(W)|      (colour-c vertices with all neighbours in W)
    sum_{v in W} x_v <= min_c |N_c(W)|       (colour-c vertices with a neighbour in W)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import networkx as nx

from .core import Instance, Matching, require_valid, verify_matching

DEFAULT_K_LIMIT = 12


class KLimitExceeded(RuntimeError):
    pass


class ReconstructionError(RuntimeError):
    """Flow reconstruction failed for a feasible interval assignment (a bug)."""


@dataclass(frozen=True)
class IntervalAssignment:
    x: tuple[int, ...]
    y: tuple[int, ...]


@dataclass(frozen=True)
class NeighborhoodTables:
    """``covered[W]`` = max_c |nu_c(W)|, ``reach[W]`` = min_c |N_c(W)|, W a bitmask over V."""

    covered: tuple[int, ...]
    reach: tuple[int, ...]
    per_color_n: tuple[tuple[int, ...], ...]
    per_color_nu: tuple[tuple[int, ...], ...]


def neighborhood_tables(inst: Instance) -> NeighborhoodTables:
    k, nc = inst.nv, inst.num_colors
    size = 1 << k
    n_c = [[0] * size for _ in range(nc)]
    nu_c = [[0] * size for _ in range(nc)]
    for i, nbrs in enumerate(inst.adj_u):
        c = inst.colors[i]
        mask = 0
        for j in nbrs:
            mask |= 1 << j
        for w in range(size):
            if w & mask:
                n_c[c][w] += 1
            if mask & ~w == 0:
                nu_c[c][w] += 1
    covered = tuple(max(nu_c[c][w] for c in range(nc)) for w in range(size))
    reach = tuple(min(n_c[c][w] for c in range(nc)) for w in range(size))
    return NeighborhoodTables(covered, reach, tuple(map(tuple, n_c)), tuple(map(tuple, nu_c)))


def check_intervals(inst: Instance, iv: IntervalAssignment,
                    tables: Optional[NeighborhoodTables] = None) -> list[str]:
    """Every violated constraint, checked exhaustively over all 2^k subsets."""
    tables = tables or neighborhood_tables(inst)
    out = []
    for j, lim in enumerate(inst.thresholds):
        if iv.x[j] < 0 or not 0 <= iv.y[j] - iv.x[j] <= lim:
            out.append(f"interval of v{j}: x={iv.x[j]} y={iv.y[j]} L={lim}")
    for w in range(1 << inst.nv):
        sy = sum(iv.y[j] for j in range(inst.nv) if w >> j & 1)
        sx = sum(iv.x[j] for j in range(inst.nv) if w >> j & 1)
        if sy < tables.covered[w]:
            out.append(f"W={w:b}: sum y={sy} < {tables.covered[w]}")
        if sx > tables.reach[w]:
            out.append(f"W={w:b}: sum x={sx} > {tables.reach[w]}")
    return out


def ilp1_feasible(inst: Instance, k_limit: Optional[int] = DEFAULT_K_LIMIT) -> Optional[IntervalAssignment]:
    """Depth-first search over y_v (x_v = max(0, y_v - L(v)) dominates every other x_v).

    Lowering x_v only loosens the x-constraints, so the smallest admissible
    x_v is the only one worth trying.  The y range of each vertex is cut down
    by every subset constraint whose other members are already decided, with
    optimistic bounds for undecided members.
    """
    require_valid(inst)
    k = inst.nv
    if k_limit is not None and k > k_limit:
        raise KLimitExceeded(f"|V|={k} exceeds the limit {k_limit}")
    t = neighborhood_tables(inst)
    if t.covered[0] > 0:  # an isolated U vertex
        return None
    lim = inst.thresholds
    nc = inst.num_colors
    ymax = []
    for j in range(k):
        bit = 1 << j
        ns = [t.per_color_n[c][bit] for c in range(nc)]
        ymax.append(min(max(ns), min(ns) + lim[j]))
    subsets_with = [[w for w in range(1 << k) if w >> j & 1] for j in range(k)]
    y = [0] * k
    x = [0] * k

    def y_range(j: int) -> tuple[int, int]:
        lo, hi = 0, ymax[j]
        decided = (1 << j) - 1
        for w in subsets_with[j]:
            rest_y = 0
            rest_x = 0
            others = w & ~(1 << j)
            r = others
            while r:
                jj = (r & -r).bit_length() - 1
                r &= r - 1
                if decided >> jj & 1:
                    rest_y += y[jj]
                    rest_x += x[jj]
                else:
                    rest_y += ymax[jj]
            lo = max(lo, t.covered[w] - rest_y)
            # x of undecided members is at least 0
            room = t.reach[w] - rest_x
            hi = min(hi, room + lim[j] if room >= 0 else -1)
        return lo, hi

    def dfs(j: int) -> bool:
        if j == k:
            return True
        lo, hi = y_range(j)
        for yj in range(lo, hi + 1):
            y[j] = yj
            x[j] = max(0, yj - lim[j])
            if dfs(j + 1):
                return True
        return False

    if not dfs(0):
        return None
    iv = IntervalAssignment(tuple(x), tuple(y))
    assert not check_intervals(inst, iv, t)
    return iv


def _flow_for_color(inst: Instance, members: list[int], iv: IntervalAssignment) -> list[tuple[int, int]]:
    """Circulation with lower bounds for one colour class via the standard reduction.

    Edges: s->u [1,1], u->v [0,1], v->t [x_v, y_v], t->s [0, inf).
    """
    g = nx.DiGraph()
    excess: dict[object, int] = {}

    def edge(a, b, low: int, cap: Optional[int]) -> None:
        g.add_node(a)
        g.add_node(b)
        if cap is None:
            g.add_edge(a, b)
        elif cap - low > 0:
            g.add_edge(a, b, capacity=cap - low)
        excess[b] = excess.get(b, 0) + low
        excess[a] = excess.get(a, 0) - low

    for i in members:
        edge("s", ("u", i), 1, 1)
        for j in inst.adj_u[i]:
            edge(("u", i), ("v", j), 0, 1)
    for j in range(inst.nv):
        edge(("v", j), "t", iv.x[j], iv.y[j])
    edge("t", "s", 0, None)
    need = 0
    for node, e in list(excess.items()):
        if e > 0:
            g.add_edge("S*", node, capacity=e)
            need += e
        elif e < 0:
            g.add_edge(node, "T*", capacity=-e)
    if need == 0:
        return []
    value, flow = nx.maximum_flow(g, "S*", "T*", flow_func=nx.algorithms.flow.edmonds_karp)
    if value != need:
        raise ReconstructionError("lower-bound circulation infeasible")
    pairs = []
    for i in members:
        for j in inst.adj_u[i]:
            if flow[("u", i)].get(("v", j), 0) > 0:
                pairs.append((i, j))
                break
    return pairs


def reconstruct_from_intervals(inst: Instance, iv: IntervalAssignment) -> Matching:
    """A left-perfect matching whose per-colour load at each v lies in [x_v, y_v]."""
    by_color: list[list[int]] = [[] for _ in range(inst.num_colors)]
    for i, c in enumerate(inst.colors):
        by_color[c].append(i)
    pairs: list[tuple[int, int]] = []
    for members in by_color:
        got = _flow_for_color(inst, members, iv)
        if len(got) != len(members):
            raise ReconstructionError("colour class not fully matched")
        pairs.extend(got)
    return Matching.from_indices(inst, pairs)


def solve_smallk(inst: Instance, k_limit: Optional[int] = DEFAULT_K_LIMIT) -> Optional[Matching]:
    iv = ilp1_feasible(inst, k_limit)
    if iv is None:
        return None
    m = reconstruct_from_intervals(inst, iv)
    if not verify_matching(inst, m).overall:
        raise ReconstructionError("reconstructed matching is not fair")
    return m
