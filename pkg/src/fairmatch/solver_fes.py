"""Solver parameterized by the feedback edge number.

For every subset F' of a feedback edge set F that is itself a many-to-one
matching, the edges of F' are fixed, their U endpoints are removed together
with all of F, and the remaining forest is solved by a two-function tree DP:
``f(w)`` says the subtree below ``w`` can be completed, ``g(w)`` says it can
be completed when ``w`` is additionally matched to its parent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .core import Instance, Matching, require_valid, verify_matching
from .structure import feedback_edge_indices


@dataclass
class FPrimeContext:
    """Fixed edges F' (as ``(u index, v index)``) and derived per-(v, color) counts."""

    fixed: tuple[tuple[int, int], ...]
    removed_u: frozenset[int] = field(init=False)
    m: dict[int, list[int]] = field(init=False)

    def __post_init__(self) -> None:
        us = [i for i, _ in self.fixed]
        if len(set(us)) != len(us):
            raise ValueError("F' is not a many-to-one matching")
        self.removed_u = frozenset(us)
        self.m = {}

    def counts(self, inst: Instance) -> dict[int, list[int]]:
        if not self.m and self.fixed:
            for i, j in self.fixed:
                self.m.setdefault(j, [0] * inst.num_colors)[inst.colors[i]] += 1
        return self.m


class ForestDP:
    """f/g tables over the forest G - F rooted once; F' only removes vertices.

    Each tree of G - F is rooted at its lowest-index U vertex (or at its only
    vertex when it holds no U vertex).  Removing a U vertex of F' turns each of
    its children into the root of a new component; the recurrences are valid
    at any root, so the children are simply checked with ``f``.
    """

    def __init__(self, inst: Instance, forest_edges: Sequence[int]):
        self.inst = inst
        nu, n = inst.nu, inst.nu + inst.nv
        adj: list[list[int]] = [[] for _ in range(n)]
        for k in forest_edges:
            i, j = inst.edge_index[k]
            adj[i].append(nu + j)
            adj[nu + j].append(i)
        for a in adj:
            a.sort()
        parent = [-2] * n
        order: list[int] = []
        roots: list[int] = []
        for s in range(n):  # U nodes come first, so U roots are preferred
            if parent[s] != -2:
                continue
            parent[s] = -1
            roots.append(s)
            stack = [s]
            while stack:
                x = stack.pop()
                order.append(x)
                for y in adj[x]:
                    if parent[y] == -2:
                        parent[y] = x
                        stack.append(y)
        self.parent = parent
        self.roots = roots
        self.children: list[list[int]] = [[y for y in adj[x] if parent[y] == x] for x in range(n)]
        self.post = order[::-1]
        self.post_pos = [0] * n
        for k, x in enumerate(self.post):
            self.post_pos[x] = k
        self.nu = nu
        self.k = inst.num_colors
        self.col = inst.colors
        self.lim = inst.thresholds
        self.zero = [0] * self.k

    # -- recurrences ---------------------------------------------------------

    def eval_v(self, x: int, f: list[bool], g: list[bool], removed: frozenset[int],
               m: dict[int, list[int]]) -> tuple[bool, bool]:
        j = x - self.nu
        n1 = list(m.get(j, self.zero))
        tot = n1[:]
        col = self.col
        for u in self.children[x]:
            if u in removed:
                continue
            fu, gu = f[u], g[u]
            if not (fu or gu):
                return False, False
            if gu:
                c = col[u]
                tot[c] += 1
                if not fu:
                    n1[c] += 1
        lim = self.lim[j]
        a, b = max(n1), min(tot)
        fv = a - b <= lim
        p = self.parent[x]
        if p < 0:
            return fv, False
        c0 = col[p]
        n1[c0] += 1
        tot[c0] += 1
        gv = max(n1) - min(tot) <= lim
        return fv, gv

    def eval_u(self, x: int, f: list[bool], g: list[bool]) -> tuple[bool, bool]:
        bad = [v for v in self.children[x] if not f[v]]
        gu = not bad and self.parent[x] >= 0
        if not bad:
            fu = any(g[v] for v in self.children[x])
        elif len(bad) == 1:
            fu = g[bad[0]]
        else:
            fu = False
        return fu, gu

    def full_pass(self, removed: frozenset[int], m: dict[int, list[int]]) -> tuple[list[bool], list[bool]]:
        n = len(self.post)
        f = [False] * n
        g = [False] * n
        nu = self.nu
        for x in self.post:
            if x < nu:
                if x in removed:
                    continue
                f[x], g[x] = self.eval_u(x, f, g)
            else:
                f[x], g[x] = self.eval_v(x, f, g, removed, m)
        return f, g

    def component_roots(self, removed: frozenset[int]) -> list[int]:
        out = [r for r in self.roots if r not in removed]
        for u in sorted(removed):
            out.extend(self.children[u])
        return out

    def feasible_incremental(self, base_f: list[bool], base_g: list[bool],
                             removed: frozenset[int], m: dict[int, list[int]]) -> bool:
        """Re-evaluate only ancestors of the vertices F' touches."""
        parent = self.parent
        dirty: set[int] = set()
        starts = [parent[u] for u in removed if parent[u] >= 0]
        starts.extend(self.nu + j for j in m)
        for x in starts:
            while x >= 0 and x not in dirty:
                dirty.add(x)
                x = parent[x]
        f = base_f[:] if dirty else base_f
        g = base_g[:] if dirty else base_g
        nu = self.nu
        for x in sorted(dirty, key=self.post_pos.__getitem__):
            if x < nu:
                if x in removed:
                    continue
                f[x], g[x] = self.eval_u(x, f, g)
            else:
                f[x], g[x] = self.eval_v(x, f, g, removed, m)
        return all(f[r] for r in self.component_roots(removed))

    # -- witness ---------------------------------------------------------------

    def reconstruct(self, f: list[bool], g: list[bool], removed: frozenset[int],
                    m: dict[int, list[int]]) -> list[tuple[int, int]]:
        """Top-down pass: lowest-index choices, loads l_c = max(min(A, B), n1_c + m_c)."""
        pairs: list[tuple[int, int]] = []
        nu, col = self.nu, self.col
        stack = [(r, False) for r in self.component_roots(removed)]
        while stack:
            x, to_parent = stack.pop()
            kids = self.children[x]
            if x < nu:
                if to_parent:
                    pairs.append((x, self.parent[x] - nu))
                    stack.extend((v, False) for v in kids)
                    continue
                bad = [v for v in kids if not f[v]]
                pick = bad[0] if bad else next(v for v in kids if g[v])
                pairs.append((x, pick - nu))
                stack.extend((v, v == pick) for v in kids)
                continue
            j = x - nu
            live = [u for u in kids if u not in removed]
            base = list(m.get(j, self.zero))
            n1 = base[:]
            n2 = [0] * self.k
            for u in live:
                if g[u] and not f[u]:
                    n1[col[u]] += 1
                elif g[u]:
                    n2[col[u]] += 1
            if to_parent:
                n1[col[self.parent[x]]] += 1
                base[col[self.parent[x]]] += 1
            a = max(n1)
            b = min(n1[c] + n2[c] for c in range(self.k))
            low = min(a, b)
            extra = [max(low, n1[c]) - n1[c] for c in range(self.k)]
            for u in live:
                c = col[u]
                if g[u] and not f[u]:
                    stack.append((u, True))
                elif g[u] and extra[c] > 0:
                    extra[c] -= 1
                    stack.append((u, True))
                else:
                    stack.append((u, False))
        return pairs


def tree_dp(inst: Instance, component: Sequence[int], ctx: FPrimeContext) -> tuple[bool, list[tuple[int, int]]]:
    """Solve one tree component (graph nodes) of G - F - U' under context ``ctx``.

    Returns feasibility and the matching pairs ``(u index, v index)`` inside it.
    """
    comp = set(component)
    nu = inst.nu
    edges = [k for k, (i, j) in enumerate(inst.edge_index)
             if i in comp and nu + j in comp and i not in ctx.removed_u]
    sub = ForestDP(inst, edges)
    m = ctx.counts(inst)
    keep = frozenset(x for x in range(nu) if x not in comp) | ctx.removed_u
    f, g = sub.full_pass(keep, m)
    roots = [r for r in sub.component_roots(keep) if r in comp]
    ok = all(f[r] for r in roots)
    if not ok:
        return False, []
    pairs = sub.reconstruct(f, g, keep, m)
    return True, [(i, j) for i, j in pairs if i in comp]


def _fprime_subsets(inst: Instance, fes: Sequence[int]):
    """Subsets of F (as edge-index tuples) whose edges have distinct U endpoints."""
    edges = inst.edge_index
    chosen: list[int] = []
    used: set[int] = set()

    def rec(pos: int):
        if pos == len(fes):
            yield tuple(chosen)
            return
        yield from rec(pos + 1)
        i = edges[fes[pos]][0]
        if i not in used:
            used.add(i)
            chosen.append(fes[pos])
            yield from rec(pos + 1)
            chosen.pop()
            used.discard(i)

    yield from rec(0)


class FesLimitExceeded(RuntimeError):
    pass


def solve_fes(inst: Instance, max_fes: Optional[int] = None) -> Optional[Matching]:
    require_valid(inst)
    fes = feedback_edge_indices(inst)
    if max_fes is not None and len(fes) > max_fes:
        raise FesLimitExceeded(f"feedback edge number {len(fes)} exceeds {max_fes}")
    fset = set(fes)
    forest = [k for k in range(len(inst.edges)) if k not in fset]
    dp = ForestDP(inst, forest)
    base_f, base_g = dp.full_pass(frozenset(), {})
    for subset in _fprime_subsets(inst, fes):
        ctx = FPrimeContext(tuple(inst.edge_index[k] for k in subset))
        m = ctx.counts(inst)
        if not dp.feasible_incremental(base_f, base_g, ctx.removed_u, m):
            continue
        f, g = dp.full_pass(ctx.removed_u, m)
        pairs = dp.reconstruct(f, g, ctx.removed_u, m) + list(ctx.fixed)
        result = Matching.from_indices(inst, pairs)
        assert verify_matching(inst, result).overall, "fes witness rejected"
        return result
    return None
