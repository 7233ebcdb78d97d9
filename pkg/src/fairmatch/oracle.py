"""Reference solver: backtracking with bound propagation, plus plain enumeration."""

from __future__ import annotations

import itertools
from typing import Optional

from .core import Instance, Matching, require_valid, verify_matching

DEFAULT_NODE_BUDGET = 10**7


class BudgetExceeded(RuntimeError):
    """The search visited more nodes than its budget allowed."""


class _Contradiction(Exception):
    pass


class _State:
    """Partial assignment with per-(v, color) committed and assignable counts."""

    __slots__ = ("assign", "domain", "committed", "assignable", "open")

    def copy(self) -> "_State":
        s = _State.__new__(_State)
        s.assign = self.assign[:]
        s.domain = [set(d) for d in self.domain]
        s.committed = [row[:] for row in self.committed]
        s.assignable = [row[:] for row in self.assignable]
        s.open = set(self.open)
        return s


class _Search:
    def __init__(self, inst: Instance, budget: int):
        self.inst = inst
        self.budget = budget
        self.nodes = 0
        self.col = inst.colors
        self.lim = inst.thresholds
        self.k = inst.num_colors

    def initial(self) -> _State:
        inst = self.inst
        s = _State()
        s.assign = [-1] * inst.nu
        s.domain = [set(a) for a in inst.adj_u]
        s.committed = [[0] * self.k for _ in range(inst.nv)]
        s.assignable = [[0] * self.k for _ in range(inst.nv)]
        for i, dom in enumerate(s.domain):
            for j in dom:
                s.assignable[j][self.col[i]] += 1
        s.open = set(range(inst.nu))
        return s

    def commit(self, s: _State, i: int, j: int) -> None:
        c = self.col[i]
        for jj in s.domain[i]:
            s.assignable[jj][c] -= 1
        s.domain[i] = {j}
        s.assign[i] = j
        s.committed[j][c] += 1
        s.open.discard(i)

    def remove(self, s: _State, i: int, j: int) -> None:
        s.domain[i].discard(j)
        s.assignable[j][self.col[i]] -= 1

    def propagate(self, s: _State, dirty: set[int]) -> None:
        """Fixpoint of the pruning and forcing rules; raises on a dead end."""
        inst, col, lim = self.inst, self.col, self.lim
        while True:
            changed: set[int] = set()
            # (c) empty domain, (a) singleton domain
            for i in sorted(s.open):
                d = s.domain[i]
                if not d:
                    raise _Contradiction
                if len(d) == 1:
                    j = next(iter(d))
                    self.commit(s, i, j)
                    changed.add(j)
            for j in sorted(dirty | changed):
                com, asg = s.committed[j], s.assignable[j]
                hi_low = max(com)
                low_up = min(a + b for a, b in zip(com, asg))
                # (b) interval bound
                if hi_low - low_up > lim[j]:
                    raise _Contradiction
                need = hi_low - lim[j]
                for c in range(self.k):
                    if asg[c] == 0:
                        continue
                    if com[c] + 1 - low_up > lim[j]:
                        # one more of color c at j can never be balanced
                        for i in inst.adj_v[j]:
                            if col[i] == c and i in s.open and j in s.domain[i]:
                                self.remove(s, i, j)
                                changed.add(j)
                                changed.update(s.domain[i])
                    elif com[c] + asg[c] == need:
                        # every candidate of color c must go to j
                        for i in inst.adj_v[j]:
                            if col[i] == c and i in s.open and j in s.domain[i]:
                                others = s.domain[i] - {j}
                                self.commit(s, i, j)
                                changed.add(j)
                                changed.update(others)
            if not changed:
                return
            dirty = changed

    def run(self) -> Optional[list[int]]:
        try:
            root = self.initial()
            self.propagate(root, set(range(self.inst.nv)))
        except _Contradiction:
            return None
        stack = [root]
        while stack:
            s = stack.pop()
            if not s.open:
                return s.assign
            self.nodes += 1
            if self.nodes > self.budget:
                raise BudgetExceeded(f"node budget {self.budget} exhausted")
            i = min(s.open, key=lambda x: (len(s.domain[x]), x))
            children = []
            for j in sorted(s.domain[i]):
                t = s.copy()
                others = t.domain[i] - {j}
                self.commit(t, i, j)
                try:
                    self.propagate(t, others | {j})
                except _Contradiction:
                    continue
                children.append(t)
            stack.extend(reversed(children))
        return None


def solve_bruteforce(inst: Instance, budget: int = DEFAULT_NODE_BUDGET) -> Optional[Matching]:
    """Exact decision with witness; ``None`` means no fair left-perfect matching exists.

    Raises :class:`BudgetExceeded` rather than answering when the search is cut off.
    """
    require_valid(inst)
    assign = _Search(inst, budget).run()
    if assign is None:
        return None
    m = Matching.from_indices(inst, enumerate(assign))
    assert verify_matching(inst, m).overall
    return m


def solve_enumerate(inst: Instance, limit: int = 10**6) -> Optional[Matching]:
    """Unpruned product enumeration over every U vertex's neighbour choice."""
    require_valid(inst)
    total = 1
    for a in inst.adj_u:
        total *= len(a)
    if total > limit:
        raise BudgetExceeded(f"{total} assignments exceed limit {limit}")
    col, lim, k = inst.colors, inst.thresholds, inst.num_colors
    for choice in itertools.product(*inst.adj_u):
        counts = [[0] * k for _ in range(inst.nv)]
        for i, j in enumerate(choice):
            counts[j][col[i]] += 1
        if all(max(row) - min(row) <= lim[j] for j, row in enumerate(counts)):
            return Matching.from_indices(inst, enumerate(choice))
    return None
