"""Structural parameters and decompositions of the instance graph.

All graph routines work on plain adjacency lists over integer nodes.  For an
:class:`~fairmatch.core.Instance` U vertex ``i`` is node ``i`` and V vertex
``j`` is node ``nu + j`` (see ``Instance.graph_adj``).
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

from .core import Instance

Adjacency = Sequence[Iterable[int]]


# -- elementary parameters ---------------------------------------------------

def spanning_forest(adj: Adjacency) -> tuple[list[int], list[int]]:
    """BFS forest: returns (parent, order); roots have parent -1."""
    n = len(adj)
    parent = [-2] * n
    order: list[int] = []
    for s in range(n):
        if parent[s] != -2:
            continue
        parent[s] = -1
        queue = deque([s])
        while queue:
            x = queue.popleft()
            order.append(x)
            for y in adj[x]:
                if parent[y] == -2:
                    parent[y] = x
                    queue.append(y)
    return parent, order


def feedback_edge_indices(inst: Instance) -> list[int]:
    """Indices into ``inst.edges`` of the non-forest edges of a BFS spanning forest."""
    parent, _ = spanning_forest(inst.graph_adj)
    nu = inst.nu
    out = []
    for k, (i, j) in enumerate(inst.edge_index):
        if parent[i] != nu + j and parent[nu + j] != i:
            out.append(k)
    return out


def feedback_edge_set(inst: Instance) -> list[tuple[str, str]]:
    return [inst.edges[k] for k in feedback_edge_indices(inst)]


def count_components(adj: Adjacency) -> int:
    parent, _ = spanning_forest(adj)
    return sum(1 for p in parent if p == -1)


def degree_stats(inst: Instance) -> tuple[int, int]:
    du = max((len(a) for a in inst.adj_u), default=0)
    dv = max((len(a) for a in inst.adj_v), default=0)
    return du, dv


# -- twins ------------------------------------------------------------------

@dataclass(frozen=True)
class TwinClass:
    side: str  # "U" or "V"
    members: tuple[str, ...]


@dataclass(frozen=True)
class TwinPartition:
    classes: tuple[TwinClass, ...]

    @property
    def nd(self) -> int:
        return len(self.classes)

    def side(self, side: str) -> list[TwinClass]:
        return [c for c in self.classes if c.side == side]


def twin_classes(inst: Instance) -> list[tuple[str, list[int]]]:
    """Open-twin classes as ``(side, node list)``, ordered by first member."""
    adj = inst.graph_adj
    groups: dict[tuple[str, frozenset[int]], list[int]] = {}
    for x, nbrs in enumerate(adj):
        if not nbrs:
            raise ValueError(f"isolated vertex {inst.node_name(x)!r}; preprocess first")
        side = "U" if x < inst.nu else "V"
        groups.setdefault((side, frozenset(nbrs)), []).append(x)
    return [(side, members) for (side, _), members in groups.items()]


def twin_partition(inst: Instance) -> TwinPartition:
    return TwinPartition(tuple(
        TwinClass(side, tuple(inst.node_name(x) for x in members))
        for side, members in twin_classes(inst)
    ))


# -- tree decompositions ------------------------------------------------------

@dataclass(frozen=True)
class TreeDecomposition:
    bags: tuple[frozenset[int], ...]
    tree_edges: tuple[tuple[int, int], ...]

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1


def validate_td(td: TreeDecomposition, adj: Adjacency) -> list[str]:
    """Check the three decomposition axioms plus that the bag graph is a tree."""
    problems: list[str] = []
    nb = len(td.bags)
    if nb == 0:
        return ["no bags"]
    tadj: list[list[int]] = [[] for _ in range(nb)]
    for a, b in td.tree_edges:
        if not (0 <= a < nb and 0 <= b < nb) or a == b:
            problems.append(f"bad tree edge ({a},{b})")
            continue
        tadj[a].append(b)
        tadj[b].append(a)
    if len(td.tree_edges) != nb - 1 or count_components(tadj) != 1:
        problems.append("bag graph is not a tree")
        return problems
    n = len(adj)
    holders: list[list[int]] = [[] for _ in range(n)]
    for t, bag in enumerate(td.bags):
        for x in bag:
            if not 0 <= x < n:
                problems.append(f"bag {t} holds unknown vertex {x}")
            else:
                holders[x].append(t)
    for x in range(n):
        if not holders[x]:
            problems.append(f"vertex {x} in no bag")
    for x, nbrs in enumerate(adj):
        for y in nbrs:
            if x < y and not any(y in td.bags[t] for t in holders[x]):
                problems.append(f"edge ({x},{y}) in no bag")
    for x in range(n):
        hs = holders[x]
        if len(hs) <= 1:
            continue
        inside = set(hs)
        seen = {hs[0]}
        stack = [hs[0]]
        while stack:
            t = stack.pop()
            for s in tadj[t]:
                if s in inside and s not in seen:
                    seen.add(s)
                    stack.append(s)
        if len(seen) != len(inside):
            problems.append(f"bags holding vertex {x} are disconnected")
    return problems


def _fill_in(adj: list[set[int]], x: int) -> int:
    nb = list(adj[x])
    missing = 0
    for a in range(len(nb)):
        na = adj[nb[a]]
        for b in range(a + 1, len(nb)):
            if nb[b] not in na:
                missing += 1
    return missing


def min_fill_order(adj: Adjacency) -> list[int]:
    """Min-fill elimination order; ties go to the lowest vertex index."""
    g = [set(a) for a in adj]
    n = len(g)
    alive = [True] * n
    heap = [(_fill_in(g, x), x) for x in range(n)]
    heapq.heapify(heap)
    current = [h[0] for h in sorted(heap, key=lambda h: h[1])]
    order: list[int] = []
    while heap:
        f, x = heapq.heappop(heap)
        if not alive[x] or f != current[x]:
            continue
        alive[x] = False
        order.append(x)
        nbrs = list(g[x])
        for a in nbrs:
            g[a].discard(x)
        for ai in range(len(nbrs)):
            for bi in range(ai + 1, len(nbrs)):
                a, b = nbrs[ai], nbrs[bi]
                if b not in g[a]:
                    g[a].add(b)
                    g[b].add(a)
        g[x] = set()
        touched = set(nbrs)
        for a in nbrs:
            touched.update(g[a])
        for y in touched:
            if alive[y]:
                fy = _fill_in(g, y)
                if fy != current[y]:
                    current[y] = fy
                    heapq.heappush(heap, (fy, y))
    return order


def order_width(adj: Adjacency, order: Sequence[int]) -> int:
    g = [set(a) for a in adj]
    width = -1
    for x in order:
        nbrs = g[x]
        width = max(width, len(nbrs))
        for a in nbrs:
            g[a].discard(x)
            g[a].update(nbrs - {a})
        g[x] = set()
    return width


def exact_treewidth_order(adj: Adjacency) -> list[int]:
    """Optimal elimination order by branch and bound over eliminated sets.

    Uses TW(S) = min_v max(TW(S - v), |Q(S - v, v)|), where Q(S, v) are the
    vertices outside S + v reachable from v through S.
    """
    n = len(adj)
    nbr = [0] * n
    for x, ys in enumerate(adj):
        for y in ys:
            nbr[x] |= 1 << y
    full = (1 << n) - 1

    def q_size(s: int, v: int) -> int:
        seen = 1 << v
        frontier = 1 << v
        reach = 0
        while frontier:
            x = (frontier & -frontier).bit_length() - 1
            frontier &= frontier - 1
            out = nbr[x] & ~seen
            seen |= out
            reach |= out & ~s
            frontier |= out & s
        return bin(reach).count("1")

    start = min_fill_order(adj)
    ub = order_width(adj, start)

    @lru_cache(maxsize=None)
    def tw(s: int) -> tuple[int, int]:
        # (width of best ordering of s placed first, last vertex of it)
        if s == 0:
            return -1, -1
        best, arg = n + 1, -1
        rest = s
        while rest:
            v = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            qv = q_size(s & ~(1 << v), v)
            if qv >= best or qv > ub:
                continue
            sub, _ = tw(s & ~(1 << v))
            cand = max(sub, qv)
            if cand < best:
                best, arg = cand, v
        return best, arg

    if tw(full)[0] > ub:
        return start
    order: list[int] = []
    s = full
    while s:
        _, v = tw(s)
        order.append(v)
        s &= ~(1 << v)
    order.reverse()
    tw.cache_clear()
    return order


def td_from_order(adj: Adjacency, order: Sequence[int]) -> TreeDecomposition:
    """Bag for x is x plus its higher neighbours in the filled graph."""
    n = len(adj)
    pos = [0] * n
    for k, x in enumerate(order):
        pos[x] = k
    g = [set(a) for a in adj]
    bags: list[frozenset[int]] = []
    later_nbrs: list[set[int]] = []
    for x in order:
        nbrs = {y for y in g[x] if pos[y] > pos[x]}
        later_nbrs.append(nbrs)
        bags.append(frozenset(nbrs | {x}))
        for a in nbrs:
            g[a].update(nbrs - {a})
    edges: list[tuple[int, int]] = []
    roots: list[int] = []
    for k, x in enumerate(order):
        if later_nbrs[k]:
            p = min(pos[y] for y in later_nbrs[k])
            edges.append((k, p))
        else:
            roots.append(k)
    for a, b in zip(roots, roots[1:]):
        edges.append((a, b))
    if not bags:
        bags.append(frozenset())
    return TreeDecomposition(tuple(bags), tuple(edges))


EXACT_TW_LIMIT = 15


def tree_decomposition_of(adj: Adjacency, exact: bool | None = None) -> TreeDecomposition:
    if exact is None:
        exact = len(adj) <= EXACT_TW_LIMIT
    order = exact_treewidth_order(adj) if exact else min_fill_order(adj)
    return td_from_order(adj, order)


def tree_decomposition(inst: Instance, exact: bool | None = None) -> TreeDecomposition:
    return tree_decomposition_of(inst.graph_adj, exact)


# -- nice tree decompositions ------------------------------------------------

LEAF, INTRODUCE, FORGET, JOIN = "leaf", "introduce", "forget", "join"


@dataclass(frozen=True)
class NiceNode:
    kind: str
    bag: frozenset[int]
    children: tuple[int, ...] = ()
    vertex: int = -1


@dataclass(frozen=True)
class NiceTreeDecomposition:
    """Nodes are stored children-first; the root is the last node."""

    nodes: tuple[NiceNode, ...]

    @property
    def root(self) -> int:
        return len(self.nodes) - 1

    @property
    def width(self) -> int:
        return max((len(nd.bag) for nd in self.nodes), default=0) - 1

    def as_td(self) -> TreeDecomposition:
        edges = tuple((c, t) for t, nd in enumerate(self.nodes) for c in nd.children)
        return TreeDecomposition(tuple(nd.bag for nd in self.nodes), edges)


def make_nice(td: TreeDecomposition, root_choice: int = 0,
              adj: Adjacency | None = None) -> NiceTreeDecomposition:
    if adj is not None:
        problems = validate_td(td, adj)
        if problems:
            raise ValueError("invalid tree decomposition: " + "; ".join(problems[:5]))
    nb = len(td.bags)
    if not 0 <= root_choice < nb:
        raise ValueError(f"root_choice {root_choice} out of range")
    tadj: list[list[int]] = [[] for _ in range(nb)]
    for a, b in td.tree_edges:
        tadj[a].append(b)
        tadj[b].append(a)
    parent = [-2] * nb
    parent[root_choice] = -1
    bfs = [root_choice]
    for t in bfs:
        for s in sorted(tadj[t]):
            if parent[s] == -2:
                parent[s] = t
                bfs.append(s)
    if len(bfs) != nb:
        raise ValueError("invalid tree decomposition: bag graph disconnected")
    children: list[list[int]] = [[] for _ in range(nb)]
    for t in bfs[1:]:
        children[parent[t]].append(t)

    nodes: list[NiceNode] = []

    def add(kind: str, bag: frozenset[int], kids: tuple[int, ...], vertex: int = -1) -> int:
        nodes.append(NiceNode(kind, bag, kids, vertex))
        return len(nodes) - 1

    def morph(top: int, target: frozenset[int]) -> int:
        bag = nodes[top].bag
        for x in sorted(bag - target):
            bag = bag - {x}
            top = add(FORGET, bag, (top,), x)
        for x in sorted(target - bag):
            bag = bag | {x}
            top = add(INTRODUCE, bag, (top,), x)
        return top

    top_of = [0] * nb
    for t in reversed(bfs):
        target = td.bags[t]
        if not children[t]:
            top = morph(add(LEAF, frozenset(), ()), target)
        else:
            tops = [morph(top_of[c], target) for c in children[t]]
            top = tops[0]
            for other in tops[1:]:
                top = add(JOIN, target, (top, other))
        top_of[t] = top
    morph(top_of[root_choice], frozenset())
    return NiceTreeDecomposition(tuple(nodes))


def validate_nice(ntd: NiceTreeDecomposition, adj: Adjacency | None = None) -> list[str]:
    problems: list[str] = []
    nodes = ntd.nodes
    if not nodes:
        return ["empty decomposition"]
    if nodes[-1].bag:
        problems.append("root bag not empty")
    used = [0] * len(nodes)
    for t, nd in enumerate(nodes):
        kids = nd.children
        for c in kids:
            if not 0 <= c < t:
                problems.append(f"node {t}: child {c} not stored before parent")
                return problems
            used[c] += 1
        if nd.kind == LEAF:
            ok = not kids and not nd.bag
        elif nd.kind == INTRODUCE:
            ok = (len(kids) == 1 and nd.vertex in nd.bag
                  and nodes[kids[0]].bag == nd.bag - {nd.vertex}
                  and nd.vertex not in nodes[kids[0]].bag)
        elif nd.kind == FORGET:
            ok = (len(kids) == 1 and nd.vertex not in nd.bag
                  and nodes[kids[0]].bag == nd.bag | {nd.vertex}
                  and nd.vertex in nodes[kids[0]].bag)
        elif nd.kind == JOIN:
            ok = len(kids) == 2 and all(nodes[c].bag == nd.bag for c in kids)
        else:
            ok = False
        if not ok:
            problems.append(f"node {t}: {nd.kind} arithmetic violated")
    if any(u != 1 for u in used[:-1]) or used[-1] != 0:
        problems.append("nodes do not form a single rooted tree")
    if adj is not None and not problems:
        problems.extend(validate_td(ntd.as_td(), adj))
    return problems


# -- PACE .td format -----------------------------------------------------------

def write_pace(td: TreeDecomposition, num_vertices: int) -> str:
    lines = [f"s td {len(td.bags)} {td.width + 1} {num_vertices}"]
    for t, bag in enumerate(td.bags):
        lines.append(" ".join(["b", str(t + 1)] + [str(x + 1) for x in sorted(bag)]))
    for a, b in td.tree_edges:
        lines.append(f"{a + 1} {b + 1}")
    return "\n".join(lines) + "\n"


def read_pace(text: str) -> tuple[TreeDecomposition, int]:
    """Parse a PACE .td file; returns the decomposition and its vertex count."""
    bags: dict[int, frozenset[int]] = {}
    edges: list[tuple[int, int]] = []
    header = None
    for raw in text.splitlines():
        parts = raw.split()
        if not parts or parts[0] == "c":
            continue
        if parts[0] == "s":
            if len(parts) != 5 or parts[1] != "td":
                raise ValueError(f"bad s-line: {raw!r}")
            header = tuple(int(p) for p in parts[2:])
        elif parts[0] == "b":
            bags[int(parts[1]) - 1] = frozenset(int(p) - 1 for p in parts[2:])
        elif len(parts) == 2:
            edges.append((int(parts[0]) - 1, int(parts[1]) - 1))
        else:
            raise ValueError(f"bad line: {raw!r}")
    if header is None:
        raise ValueError("missing s-line")
    nbags, _, nverts = header
    if sorted(bags) != list(range(nbags)):
        raise ValueError("bag ids do not match the s-line")
    return TreeDecomposition(tuple(bags[t] for t in range(nbags)), tuple(edges)), nverts


def load_pace(path: str | Path) -> tuple[TreeDecomposition, int]:
    return read_pace(Path(path).read_text(encoding="utf-8"))


# -- tree-depth --------------------------------------------------------------

def _components(adj: Adjacency, alive: set[int]) -> list[list[int]]:
    seen: set[int] = set()
    comps = []
    for s in sorted(alive):
        if s in seen:
            continue
        seen.add(s)
        comp = [s]
        for x in comp:
            for y in adj[x]:
                if y in alive and y not in seen:
                    seen.add(y)
                    comp.append(y)
        comps.append(comp)
    return comps


def dfs_tree_height(adj: Adjacency) -> int:
    """Height (in vertices) of a DFS forest, which is always an elimination forest."""
    n = len(adj)
    depth = [0] * n
    best = 0
    for s in range(n):
        if depth[s]:
            continue
        depth[s] = 1
        stack = [(s, iter(adj[s]))]
        while stack:
            x, it = stack[-1]
            for y in it:
                if not depth[y]:
                    depth[y] = depth[x] + 1
                    best = max(best, depth[y])
                    stack.append((y, iter(adj[y])))
                    break
            else:
                stack.pop()
        best = max(best, 1)
    return best


def _greedy_height(adj: Adjacency, alive: set[int]) -> int:
    """Remove a maximum-degree vertex, recurse into components."""
    height = 0
    work = [(comp, 1) for comp in _components(adj, alive)]
    while work:
        comp, level = work.pop()
        if len(comp) == 1:
            height = max(height, level)
            continue
        cs = set(comp)
        pick = max(comp, key=lambda x: (sum(1 for y in adj[x] if y in cs), -x))
        cs.discard(pick)
        work.extend((c, level + 1) for c in _components(adj, cs))
    return height


def treedepth_upper_of(adj: Adjacency) -> int:
    n = len(adj)
    if n == 0:
        return 0
    best = dfs_tree_height(adj)
    if n <= 400:
        best = min(best, _greedy_height(adj, set(range(n))))
    return best


def treedepth_upper(inst: Instance) -> int:
    return treedepth_upper_of(inst.graph_adj)


TD_EXACT_LIMIT = 20


def treedepth_exact_of(adj: Adjacency, limit: int = TD_EXACT_LIMIT) -> int:
    """Exact tree-depth: td(G) = 1 + min_v td(G - v) on each component.

    Memoised over vertex bitmasks with branch-and-bound cut-offs.
    """
    n = len(adj)
    if n > limit:
        raise ValueError(f"exact tree-depth limited to {limit} vertices, got {n}")
    nbr = [0] * n
    for x, ys in enumerate(adj):
        for y in ys:
            nbr[x] |= 1 << y

    def comps(s: int) -> list[int]:
        out = []
        while s:
            low = s & -s
            comp = low
            frontier = low
            while frontier:
                x = (frontier & -frontier).bit_length() - 1
                frontier &= frontier - 1
                new = nbr[x] & s & ~comp
                comp |= new
                frontier |= new
            out.append(comp)
            s &= ~comp
        return out

    exact: dict[int, int] = {}
    lower: dict[int, int] = {}

    def popcount(s: int) -> int:
        return bin(s).count("1")

    def degeneracy(s: int) -> int:
        best = 0
        while s:
            low_d, low_x = n + 1, -1
            rest = s
            while rest:
                x = (rest & -rest).bit_length() - 1
                rest &= rest - 1
                d = popcount(nbr[x] & s)
                if d < low_d:
                    low_d, low_x = d, x
            best = max(best, low_d)
            s &= ~(1 << low_x)
        return best

    def solve(s: int, ub: int) -> int:
        """Tree-depth of connected s if < ub, else some value >= ub."""
        if s in exact:
            return exact[s]
        size = popcount(s)
        if size <= 2:
            exact[s] = size
            return size
        if lower.get(s, 0) >= ub:
            return lower[s]
        verts = []
        rest = s
        edges2 = 0
        seen_keys = set()
        while rest:
            x = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            around = nbr[x] & s
            d = popcount(around)
            edges2 += d
            # twins give isomorphic remainders; branch on one of them
            key = (around, around | (1 << x))
            if key[0] in seen_keys or key[1] in seen_keys:
                continue
            seen_keys.update(key)
            verts.append((-d, x))
        if edges2 == size * (size - 1):
            exact[s] = size
            return size
        floor = max(degeneracy(s) + 1, lower.get(s, 0))
        if floor >= ub:
            lower[s] = max(lower.get(s, 0), floor)
            return floor
        verts.sort()
        best = ub
        for _, x in verts:
            if best <= floor:
                break
            parts = sorted(comps(s & ~(1 << x)), key=popcount, reverse=True)
            worst = 0
            for part in parts:
                worst = max(worst, solve(part, best - 1))
                if worst + 1 >= best:
                    break
            if worst + 1 < best:
                best = worst + 1
        if best < ub:
            exact[s] = best
        else:
            lower[s] = max(lower.get(s, 0), ub)
        return best

    full = (1 << n) - 1
    result = 0
    for comp in comps(full):
        size = popcount(comp)
        result = max(result, solve(comp, size + 1))
    return result


def treedepth_exact_small(inst: Instance) -> int:
    return treedepth_exact_of(inst.graph_adj)
