"""Dynamic program over a nice tree decomposition (treewidth and max V-degree).

A state for bag ``B`` is ``(x, y)``: ``x`` gives, for each U vertex of the bag
in sorted order, ``UNMATCHED``, ``OUT`` (matched to an already forgotten V
vertex) or the graph node of the bag V vertex it is matched to; ``y`` gives,
for each V vertex of the bag, per-colour counts of forgotten U vertices
matched to it.  Tables only hold reachable states, each with a backpointer.
"""

from __future__ import annotations

from itertools import combinations
from math import prod
from typing import Optional

from .core import Instance, Matching, require_valid, verify_matching
from .structure import (FORGET, INTRODUCE, JOIN, LEAF, NiceTreeDecomposition, make_nice,
                        tree_decomposition, validate_nice)

UNMATCHED = -1
OUT = -2

State = tuple[tuple[int, ...], tuple[tuple[int, ...], ...]]
EMPTY_STATE: State = ((), ())


class StateCapExceeded(AssertionError):
    pass


class TwdpSolver:
    def __init__(self, inst: Instance):
        self.inst = inst
        self.nu = inst.nu
        self.k = inst.num_colors
        self.col = inst.colors
        self.adj = [set(a) for a in inst.graph_adj]
        nu = inst.nu
        self.ncount = {}
        for j in range(inst.nv):
            row = [0] * self.k
            for i in inst.adj_v[j]:
                row[self.col[i]] += 1
            self.ncount[nu + j] = tuple(row)
        self.zero = (0,) * self.k

    def split(self, bag: tuple[int, ...]) -> tuple[tuple[int, ...], tuple[int, ...]]:
        cut = 0
        while cut < len(bag) and bag[cut] < self.nu:
            cut += 1
        return bag[:cut], bag[cut:]

    def state_cap(self, bag: tuple[int, ...]) -> int:
        us, vs = self.split(bag)
        return (len(vs) + 2) ** len(us) * prod(
            prod(n + 1 for n in self.ncount[v]) for v in vs)

    # -- transitions -------------------------------------------------------------

    def transition_introduce(self, table, child_bag: tuple[int, ...], w: int) -> dict:
        bag = tuple(sorted(child_bag + (w,)))
        us, vs = self.split(bag)
        out: dict[State, State] = {}
        if w < self.nu:
            p = us.index(w)
            options = [UNMATCHED] + [v for v in vs if v in self.adj[w]]
            for st in table:
                x, y = st
                for o in options:
                    out.setdefault((x[:p] + (o,) + x[p:], y), st)
        else:
            p = vs.index(w)
            cand = [q for q, u in enumerate(us) if w in self.adj[u]]
            for st in table:
                x, y = st
                y2 = y[:p] + (self.zero,) + y[p:]
                free = [q for q in cand if x[q] == UNMATCHED]
                for r in range(len(free) + 1):
                    for pick in combinations(free, r):
                        x2 = list(x)
                        for q in pick:
                            x2[q] = w
                        out.setdefault((tuple(x2), y2), st)
        return out

    def transition_forget(self, table, child_bag: tuple[int, ...], w: int) -> dict:
        us, vs = self.split(child_bag)
        out: dict[State, State] = {}
        if w < self.nu:
            p = us.index(w)
            c = self.col[w]
            for st in table:
                x, y = st
                xw = x[p]
                if xw == UNMATCHED:
                    continue
                x2 = x[:p] + x[p + 1:]
                if xw == OUT:
                    out.setdefault((x2, y), st)
                else:
                    q = vs.index(xw)
                    row = list(y[q])
                    row[c] += 1
                    out.setdefault((x2, y[:q] + (tuple(row),) + y[q + 1:]), st)
        else:
            p = vs.index(w)
            lim = self.inst.thresholds[w - self.nu]
            for st in table:
                x, y = st
                load = list(y[p])
                for q, u in enumerate(us):
                    if x[q] == w:
                        load[self.col[u]] += 1
                if max(load) - min(load) > lim:
                    continue
                x2 = tuple(OUT if xv == w else xv for xv in x)
                out.setdefault((x2, y[:p] + y[p + 1:]), st)
        return out

    def transition_join(self, left, right) -> dict:
        """Merge compatible pairs: OUT on one side needs UNMATCHED on the other."""
        def key(x):
            return tuple(UNMATCHED if xv == OUT else xv for xv in x)

        groups: dict[tuple[int, ...], list[State]] = {}
        for st in right:
            groups.setdefault(key(st[0]), []).append(st)
        out: dict[State, tuple[State, State]] = {}
        for ls in left:
            lx, ly = ls
            for rs in groups.get(key(lx), ()):
                rx, ry = rs
                x = []
                ok = True
                for a, b in zip(lx, rx):
                    if a == OUT:
                        if b == OUT:
                            ok = False
                            break
                        x.append(OUT)
                    else:
                        x.append(b)
                if not ok:
                    continue
                y = tuple(tuple(p + q for p, q in zip(ra, rb)) for ra, rb in zip(ly, ry))
                out.setdefault((tuple(x), y), (ls, rs))
        return out

    # -- driver ------------------------------------------------------------------

    def run(self, ntd: NiceTreeDecomposition) -> list[dict]:
        tables: list[dict] = []
        for t, nd in enumerate(ntd.nodes):
            if nd.kind == LEAF:
                table = {EMPTY_STATE: None}
            elif nd.kind == INTRODUCE:
                c = nd.children[0]
                table = self.transition_introduce(tables[c], tuple(sorted(ntd.nodes[c].bag)), nd.vertex)
            elif nd.kind == FORGET:
                c = nd.children[0]
                table = self.transition_forget(tables[c], tuple(sorted(ntd.nodes[c].bag)), nd.vertex)
            else:
                table = self.transition_join(tables[nd.children[0]], tables[nd.children[1]])
            if len(table) > self.state_cap(tuple(sorted(nd.bag))):
                raise StateCapExceeded(f"node {t}: {len(table)} states")
            tables.append(table)
        return tables

    def reconstruct(self, ntd: NiceTreeDecomposition, tables: list[dict]) -> list[tuple[int, int]]:
        nu = self.nu
        pairs: list[tuple[int, int]] = []
        stack = [(ntd.root, EMPTY_STATE)]
        while stack:
            t, st = stack.pop()
            nd = ntd.nodes[t]
            back = tables[t][st]
            if nd.kind == LEAF:
                continue
            if nd.kind == JOIN:
                stack.append((nd.children[0], back[0]))
                stack.append((nd.children[1], back[1]))
                continue
            c = nd.children[0]
            if nd.kind == FORGET:
                us, vs = self.split(tuple(sorted(ntd.nodes[c].bag)))
                w = nd.vertex
                cx = back[0]
                if w < nu:
                    xw = cx[us.index(w)]
                    if xw >= 0:
                        pairs.append((w, xw - nu))
                else:
                    pairs.extend((u, w - nu) for q, u in enumerate(us) if cx[q] == w)
            stack.append((c, back))
        return pairs


def solve_twdp(inst: Instance, ntd: Optional[NiceTreeDecomposition] = None) -> Optional[Matching]:
    require_valid(inst)
    if ntd is None:
        ntd = make_nice(tree_decomposition(inst))
    else:
        problems = validate_nice(ntd, inst.graph_adj)
        if problems:
            raise ValueError("decomposition invalid for instance: " + "; ".join(problems[:5]))
    solver = TwdpSolver(inst)
    tables = solver.run(ntd)
    if EMPTY_STATE not in tables[ntd.root]:
        return None
    m = Matching.from_indices(inst, solver.reconstruct(ntd, tables))
    assert verify_matching(inst, m).overall, "twdp witness rejected"
    return m
