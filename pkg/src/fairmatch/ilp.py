"""ILP models of fair matching: builders, dual graph analysis, LP text round trip.

ILP2 uses a binary ``x_{u}_{v}`` per edge and integer ``xmin_v`` / ``xmax_v``
per right vertex::

    assign_u:     sum_v x_uv = 1
    spread_v:     xmax_v - xmin_v <= L(v)
    lo_v_c:       sum_{u in U_c} x_uv - xmin_v >= 0
    hi_v_c:       sum_{u in U_c} x_uv - xmax_v <= 0
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Optional, Sequence

from .core import Instance
from .solver_smallk import neighborhood_tables
from .structure import treedepth_exact_of

BINARY = "binary"
INTEGER = "integer"
SENSES = ("<=", ">=", "=")


@dataclass(frozen=True)
class Column:
    name: str
    lower: int
    upper: int
    kind: str


@dataclass(frozen=True)
class Row:
    name: str
    coeffs: tuple[tuple[int, int], ...]  # (column index, coefficient), sorted
    sense: str
    rhs: int

    @property
    def group(self) -> tuple:
        return group_of(self.name)


@dataclass
class IlpModel:
    columns: list[Column] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)
    name: str = "model"

    def add_column(self, name: str, lower: int, upper: int, kind: str = INTEGER) -> int:
        self.columns.append(Column(name, lower, upper, kind))
        return len(self.columns) - 1

    def add_row(self, name: str, coeffs: dict[int, int], sense: str, rhs: int) -> None:
        if sense not in SENSES:
            raise ValueError(sense)
        self.rows.append(Row(name, tuple(sorted((k, c) for k, c in coeffs.items() if c)), sense, rhs))

    @property
    def column_index(self) -> dict[str, int]:
        return {c.name: k for k, c in enumerate(self.columns)}

    def norm_inf(self) -> int:
        return max((abs(c) for r in self.rows for _, c in r.coeffs), default=0)

    def satisfied(self, values: Sequence[int]) -> bool:
        for col, val in zip(self.columns, values):
            if not col.lower <= val <= col.upper:
                return False
        return all(_holds(sum(c * values[k] for k, c in r.coeffs), r.sense, r.rhs) for r in self.rows)

    def same_as(self, other: "IlpModel") -> bool:
        return self.columns == other.columns and self.rows == other.rows


def _holds(lhs: int, sense: str, rhs: int) -> bool:
    if sense == "<=":
        return lhs <= rhs
    if sense == ">=":
        return lhs >= rhs
    return lhs == rhs


_GROUP = re.compile(r"^(assign|spread|lo|hi|cover|reach|ival_lo|ival_hi)_(\d+)(?:_(\d+))?$")


def group_of(row_name: str) -> tuple:
    """Vertex of the instance graph (or its colour copy) a row belongs to.

    ``("u", i)``, ``("v", j)`` or ``("vc", j, c)``; the lo/hi pair of a
    (v, c) shares one group.  Rows of other models get ``("row", name)``.
    """
    m = _GROUP.match(row_name)
    if not m:
        return ("row", row_name)
    kind, a, b = m.group(1), int(m.group(2)), m.group(3)
    if kind == "assign":
        return ("u", a)
    if kind == "spread":
        return ("v", a)
    if kind in ("lo", "hi"):
        return ("vc", a, int(b))
    return ("row", row_name)


# -- builders ------------------------------------------------------------------------

def build_ilp2(inst: Instance) -> IlpModel:
    model = IlpModel(name="ilp2")
    xcol = {}
    for k, (i, j) in enumerate(inst.edge_index):
        xcol[i, j] = model.add_column(f"x_{i}_{j}", 0, 1, BINARY)
    lo_col, hi_col = [], []
    for j in range(inst.nv):
        deg = len(inst.adj_v[j])
        lo_col.append(model.add_column(f"xmin_{j}", 0, deg))
        hi_col.append(model.add_column(f"xmax_{j}", 0, deg))
    for i in range(inst.nu):
        model.add_row(f"assign_{i}", {xcol[i, j]: 1 for j in inst.adj_u[i]}, "=", 1)
    for j in range(inst.nv):
        model.add_row(f"spread_{j}", {hi_col[j]: 1, lo_col[j]: -1}, "<=", inst.thresholds[j])
    for j in range(inst.nv):
        for c in range(inst.num_colors):
            members = {xcol[i, j]: 1 for i in inst.adj_v[j] if inst.colors[i] == c}
            model.add_row(f"lo_{j}_{c}", {**members, lo_col[j]: -1}, ">=", 0)
            model.add_row(f"hi_{j}_{c}", {**members, hi_col[j]: -1}, "<=", 0)
    return model


def build_ilp1(inst: Instance) -> IlpModel:
    """The interval ILP over x_v (min load) and y_v (max load), every nonempty W expanded."""
    model = IlpModel(name="ilp1")
    k = inst.nv
    xs = [model.add_column(f"x_{j}", 0, len(inst.adj_v[j])) for j in range(k)]
    ys = [model.add_column(f"y_{j}", 0, len(inst.adj_v[j])) for j in range(k)]
    for j in range(k):
        model.add_row(f"ival_lo_{j}", {ys[j]: 1, xs[j]: -1}, ">=", 0)
        model.add_row(f"ival_hi_{j}", {ys[j]: 1, xs[j]: -1}, "<=", inst.thresholds[j])
    t = neighborhood_tables(inst)
    for w in range(1, 1 << k):
        members = [j for j in range(k) if w >> j & 1]
        model.add_row(f"cover_{w}", {ys[j]: 1 for j in members}, ">=", t.covered[w])
        model.add_row(f"reach_{w}", {xs[j]: 1 for j in members}, "<=", t.reach[w])
    return model


# -- dual graph ------------------------------------------------------------------------

@dataclass(frozen=True)
class DualGraph:
    labels: tuple  # one per vertex
    adj: tuple[frozenset[int], ...]

    @property
    def edges(self) -> set[tuple[int, int]]:
        return {(a, b) for a, nb in enumerate(self.adj) for b in nb if a < b}

    def adjacency_lists(self) -> list[list[int]]:
        return [sorted(nb) for nb in self.adj]


def dual_graph(model: IlpModel) -> DualGraph:
    """Rows as vertices, adjacent when they share a column."""
    by_col: list[list[int]] = [[] for _ in model.columns]
    for r, row in enumerate(model.rows):
        for k, _ in row.coeffs:
            by_col[k].append(r)
    adj = [set() for _ in model.rows]
    for rows in by_col:
        for a, b in combinations(rows, 2):
            adj[a].add(b)
            adj[b].add(a)
    return DualGraph(tuple(r.name for r in model.rows), tuple(frozenset(s) for s in adj))


def merged_dual_graph(model: IlpModel) -> DualGraph:
    """Dual graph with rows of the same group contracted into one vertex."""
    groups: dict[tuple, int] = {}
    owner = []
    for row in model.rows:
        owner.append(groups.setdefault(row.group, len(groups)))
    base = dual_graph(model)
    adj = [set() for _ in groups]
    for a, nb in enumerate(base.adj):
        for b in nb:
            if owner[a] != owner[b]:
                adj[owner[a]].add(owner[b])
    return DualGraph(tuple(groups), tuple(frozenset(s) for s in adj))


# -- structural report ----------------------------------------------------------------

@dataclass
class StructuralReport:
    norm_inf: int
    stable_set: bool
    blowup_subgraph: bool
    dual_vertices: int
    merged_vertices: int
    td_graph: Optional[int] = None
    td_dual: Optional[int] = None
    td_bound: Optional[int] = None
    notes: list[str] = field(default_factory=list)

    @property
    def td_ok(self) -> Optional[bool]:
        if self.td_dual is None:
            return None
        return self.td_dual <= self.td_bound

    def to_json(self) -> dict:
        return {
            "norm_inf": self.norm_inf, "stable_set": self.stable_set,
            "blowup_subgraph": self.blowup_subgraph, "dual_vertices": self.dual_vertices,
            "merged_vertices": self.merged_vertices, "td_graph": self.td_graph,
            "td_dual": self.td_dual, "td_bound": self.td_bound, "td_ok": self.td_ok,
            "notes": self.notes,
        }


def _blowup_vertex(inst: Instance, group: tuple) -> tuple[int, int]:
    if group[0] == "u":
        return group[1], 0
    if group[0] == "v":
        return inst.nu + group[1], 0
    return inst.nu + group[1], group[2] + 1


def structural_report(inst: Instance, model: Optional[IlpModel] = None,
                      td_limit: Optional[int] = 40) -> StructuralReport:
    """Check the structure an ILP2 model must have.

    Tree-depth is computed exactly when the merged dual graph has at most
    ``td_limit`` vertices (``None`` skips it).
    """
    model = model or build_ilp2(inst)
    raw = dual_graph(model)
    merged = merged_dual_graph(model)
    rep = StructuralReport(model.norm_inf(), True, True, len(raw.labels), len(merged.labels))

    side = [g for g in merged.labels if g[0] in ("u", "v")]
    pos = {g: k for k, g in enumerate(merged.labels)}
    for a, b in combinations(side, 2):
        if pos[b] in merged.adj[pos[a]]:
            rep.stable_set = False
            rep.notes.append(f"rows {a} and {b} share a variable")

    gadj = inst.graph_adj
    for g in merged.labels:
        if g[0] == "row":
            rep.blowup_subgraph = False
            rep.notes.append(f"row {g[1]} has no vertex in the blow-up")
    if rep.blowup_subgraph:
        image = [_blowup_vertex(inst, g) for g in merged.labels]
        if len(set(image)) != len(image):
            rep.blowup_subgraph = False
        for a, b in merged.edges:
            (x, _), (y, _) = image[a], image[b]
            if x != y and y not in gadj[x]:
                rep.blowup_subgraph = False
                rep.notes.append(f"dual edge {merged.labels[a]}-{merged.labels[b]} missing in blow-up")

    n = inst.nu + inst.nv
    if td_limit is not None and n and len(merged.labels) <= td_limit:
        rep.td_graph = treedepth_exact_of(gadj, limit=max(n, td_limit))
        rep.td_dual = treedepth_exact_of(merged.adjacency_lists(), limit=td_limit)
        rep.td_bound = (inst.num_colors + 1) * rep.td_graph
    return rep


# -- LP text format --------------------------------------------------------------------

def _term(coef: int, name: str, first: bool) -> str:
    sign = "-" if coef < 0 else ("" if first else "+")
    mag = abs(coef)
    body = name if mag == 1 else f"{mag} {name}"
    return f"{sign} {body}".strip() if first else f"{sign} {body}"


def format_lp(model: IlpModel) -> str:
    lines = [f"\\ {model.name}", "Minimize", " obj:", "Subject To"]
    for row in model.rows:
        terms = " ".join(_term(c, model.columns[k].name, t == 0) for t, (k, c) in enumerate(row.coeffs))
        lines.append(f" {row.name}: {terms or '0'} {row.sense} {row.rhs}")
    if model.columns:
        lines.append("Bounds")
        for col in model.columns:
            lines.append(f" {col.lower} <= {col.name} <= {col.upper}")
        gens = [c.name for c in model.columns if c.kind == INTEGER]
        bins = [c.name for c in model.columns if c.kind == BINARY]
        if gens:
            lines += ["Generals"] + [f" {n}" for n in gens]
        if bins:
            lines += ["Binaries"] + [f" {n}" for n in bins]
    lines.append("End")
    return "\n".join(lines) + "\n"


def export_lp(model: IlpModel, path: str | Path) -> None:
    Path(path).write_text(format_lp(model), encoding="utf-8")


_ROW = re.compile(r"^\s*([^:]+):\s*(.*?)\s*(<=|>=|=)\s*(-?\d+)\s*$")
_TERM = re.compile(r"([+-])?\s*(\d+)?\s*([A-Za-z_][\w\[\],.]*)")
_BOUND = re.compile(r"^\s*(-?\d+)\s*<=\s*(\S+)\s*<=\s*(-?\d+)\s*$")


def parse_lp(text: str) -> IlpModel:
    """Inverse of :func:`format_lp`.

    Columns follow the order of the Bounds section; columns that only appear
    elsewhere are appended in order of first appearance.
    """
    model = IlpModel()
    section = None
    raw_rows: list[tuple[str, list[tuple[int, str]], str, int]] = []
    bounds: dict[str, tuple[int, int]] = {}
    kinds: dict[str, str] = {}
    declared: list[str] = []
    seen_elsewhere: list[str] = []

    def see(name: str) -> None:
        if name not in seen_elsewhere:
            seen_elsewhere.append(name)

    for line in text.splitlines():
        s = line.strip()
        if not s:
            continue
        if s.startswith("\\"):
            model.name = s[1:].strip() or model.name
            continue
        low = s.lower()
        if low in ("minimize", "maximize", "subject to", "bounds", "generals", "binaries", "end"):
            section = low
            continue
        if section == "subject to":
            m = _ROW.match(s)
            if not m:
                raise ValueError(f"bad constraint line: {s}")
            terms = []
            body = m.group(2)
            if body != "0":
                for sign, mag, name in _TERM.findall(body):
                    coef = int(mag or 1) * (-1 if sign == "-" else 1)
                    terms.append((coef, name))
                    see(name)
            raw_rows.append((m.group(1).strip(), terms, m.group(3), int(m.group(4))))
        elif section == "bounds":
            m = _BOUND.match(s)
            if not m:
                raise ValueError(f"bad bound line: {s}")
            declared.append(m.group(2))
            bounds[m.group(2)] = (int(m.group(1)), int(m.group(3)))
        elif section in ("generals", "binaries"):
            see(s)
            kinds[s] = INTEGER if section == "generals" else BINARY
    index = {}
    order = declared + [n for n in seen_elsewhere if n not in bounds]
    for name in order:
        kind = kinds.get(name, INTEGER)
        lo, hi = (0, 1) if kind == BINARY else bounds.get(name, (0, 0))
        index[name] = model.add_column(name, lo, hi, kind)
    for name, terms, sense, rhs in raw_rows:
        coeffs: dict[int, int] = {}
        for coef, var in terms:
            coeffs[index[var]] = coeffs.get(index[var], 0) + coef
        model.add_row(name, coeffs, sense, rhs)
    return model


# -- bounded enumeration --------------------------------------------------------------

class EnumerationLimit(RuntimeError):
    pass


def enumerate_feasible(model: IlpModel, limit: int = 10**6) -> Optional[list[int]]:
    """Depth-first search over the bounded integer columns.

    After each assignment every row is checked against the range its
    undecided columns can still contribute.  Raises :class:`EnumerationLimit`
    after ``limit`` search nodes.
    """
    ncol = len(model.columns)
    rows_of: list[list[int]] = [[] for _ in range(ncol)]
    for r, row in enumerate(model.rows):
        for k, _ in row.coeffs:
            rows_of[k].append(r)
    # running activity of decided columns, and remaining min/max of undecided ones
    act = [0] * len(model.rows)
    rmin = [0] * len(model.rows)
    rmax = [0] * len(model.rows)
    for r, row in enumerate(model.rows):
        for k, c in row.coeffs:
            col = model.columns[k]
            rmin[r] += min(c * col.lower, c * col.upper)
            rmax[r] += max(c * col.lower, c * col.upper)
    if not all(_range_ok(rmin[r], rmax[r], row) for r, row in enumerate(model.rows)):
        return None
    values = [0] * ncol
    nodes = 0

    def dfs(k: int) -> bool:
        nonlocal nodes
        if k == ncol:
            return True
        col = model.columns[k]
        coef = dict()
        for r in rows_of[k]:
            coef[r] = next(c for kk, c in model.rows[r].coeffs if kk == k)
        for val in range(col.lower, col.upper + 1):
            nodes += 1
            if nodes > limit:
                raise EnumerationLimit(f"more than {limit} nodes")
            ok = True
            for r, c in coef.items():
                span_lo = min(c * col.lower, c * col.upper)
                span_hi = max(c * col.lower, c * col.upper)
                lo = act[r] + c * val + rmin[r] - span_lo
                hi = act[r] + c * val + rmax[r] - span_hi
                if not _range_ok(lo, hi, model.rows[r]):
                    ok = False
                    break
            if not ok:
                continue
            for r, c in coef.items():
                act[r] += c * val
                rmin[r] -= min(c * col.lower, c * col.upper)
                rmax[r] -= max(c * col.lower, c * col.upper)
            values[k] = val
            found = dfs(k + 1)
            for r, c in coef.items():
                act[r] -= c * val
                rmin[r] += min(c * col.lower, c * col.upper)
                rmax[r] += max(c * col.lower, c * col.upper)
            if found:
                return True
        return False

    return list(values) if dfs(0) else None


def _range_ok(lo: int, hi: int, row: Row) -> bool:
    if row.sense == "<=":
        return lo <= row.rhs
    if row.sense == ">=":
        return hi >= row.rhs
    return lo <= row.rhs <= hi
