"""Seeded instance generators: random graphs, twin blow-ups, long cycles with chords."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .core import Instance


def random_instance(rng: random.Random, max_u: int = 8, max_v: int = 4, max_colors: int = 3,
                    thresholds: tuple[int, ...] = (0, 1, 2), p: float = 0.5) -> Instance:
    nu = rng.randint(1, max_u)
    nv = rng.randint(1, max_v)
    k = rng.randint(1, max_colors)
    u = [(f"u{i}", rng.randrange(k)) for i in range(nu)]
    v = [(f"v{j}", rng.choice(thresholds)) for j in range(nv)]
    edges = [(a, b) for a, _ in u for b, _ in v if rng.random() < p]
    return Instance.build(k, u, v, edges)


def random_family(seed: int, count: int, **kw) -> list[Instance]:
    rng = random.Random(seed)
    return [random_instance(rng, **kw) for _ in range(count)]


@dataclass(frozen=True)
class BlowUp:
    """``instance`` duplicates every vertex of a small pattern; ``reference`` keeps
    the U copies but merges each V class into one vertex with the summed threshold."""

    pattern: Instance
    instance: Instance
    reference: Instance


def _random_split(rng: random.Random, total: int, parts: int) -> list[int]:
    cuts = sorted(rng.randint(0, total) for _ in range(parts - 1))
    bounds = [0] + cuts + [total]
    return [bounds[t + 1] - bounds[t] for t in range(parts)]


def random_pattern(rng: random.Random, size: int = 6, max_colors: int = 3) -> Instance:
    """A pattern on ``size`` vertices with no isolated vertex."""
    while True:
        nu = rng.randint(1, size - 1)
        nv = size - nu
        k = rng.randint(1, max_colors)
        u = [(f"p{i}", rng.randrange(k)) for i in range(nu)]
        v = [(f"q{j}", rng.randint(0, 2)) for j in range(nv)]
        edges = [(a, b) for a, _ in u for b, _ in v if rng.random() < 0.6]
        touched = {a for a, _ in edges} | {b for _, b in edges}
        if len(touched) == size:
            return Instance.build(k, u, v, edges)


def blow_up(rng: random.Random, pattern: Instance, u_factor: int, v_factor: int,
            max_threshold: int = 6) -> BlowUp:
    """Duplicate pattern vertices into twins; each V class gets a random total
    threshold in [0, max_threshold] split at random over its copies."""
    u, v, edges = [], [], []
    ref_v, ref_edges = [], []
    for pid, c in pattern.u:
        for t in range(u_factor):
            u.append((f"{pid}.{t}", c))
    for qid, _ in pattern.v:
        total = rng.randint(0, max_threshold)
        ref_v.append((qid, total))
        for t, share in enumerate(_random_split(rng, total, v_factor)):
            v.append((f"{qid}.{t}", share))
    for pid, qid in pattern.edges:
        for a in range(u_factor):
            ref_edges.append((f"{pid}.{a}", qid))
            for b in range(v_factor):
                edges.append((f"{pid}.{a}", f"{qid}.{b}"))
    inst = Instance.build(pattern.num_colors, u, v, edges)
    ref = Instance.build(pattern.num_colors, u, ref_v, ref_edges)
    return BlowUp(pattern, inst, ref)


def blow_up_to(rng: random.Random, pattern: Instance, min_vertices: int = 100,
               u_factor: int = 3) -> BlowUp:
    """Blow-up with U copied ``u_factor`` times and V copied enough to reach ``min_vertices``."""
    rest = max(0, min_vertices - u_factor * pattern.nu)
    v_factor = max(1, -(-rest // pattern.nv))
    return blow_up(rng, pattern, u_factor, v_factor)


def cycle_with_chords(rng: random.Random, n_vertices: int = 10_000, chords: int = 5,
                      num_colors: int = 2, tighten: int = 0, chord_len: Optional[int] = None) -> Instance:
    """A long even cycle with ``chords`` subdivided chords between V vertices.

    Thresholds are the per-vertex spread of a random planted matching, so the
    instance is a yes-instance unless ``tighten`` of them are lowered by one.
    The feedback edge number is ``chords + 1``.
    """
    chord_len = chord_len or max(2, n_vertices // (10 * max(chords, 1)))
    # every chord adds 2 * chord_len - 1 internal vertices; cycle gets the rest
    cycle = n_vertices - chords * (2 * chord_len - 1)
    cycle += cycle % 2
    names = [f"c{t}" for t in range(cycle)]  # even index: V, odd: U
    is_u = {names[t]: t % 2 == 1 for t in range(cycle)}
    edges = [(names[t], names[(t + 1) % cycle]) for t in range(cycle)]
    v_on_cycle = names[0::2]
    for h in range(chords):
        a, b = rng.sample(v_on_cycle, 2)
        path = [a] + [f"h{h}.{t}" for t in range(2 * chord_len - 1)] + [b]
        for t, name in enumerate(path[1:-1]):
            is_u[name] = t % 2 == 0
        edges += list(zip(path, path[1:]))
    nodes = list(is_u)
    u_ids = [x for x in nodes if is_u[x]]
    v_ids = [x for x in nodes if not is_u[x]]
    color = {x: rng.randrange(num_colors) for x in u_ids}
    oriented = [(a, b) if is_u[a] else (b, a) for a, b in edges]
    nbrs: dict[str, list[str]] = {x: [] for x in u_ids}
    for a, b in oriented:
        nbrs[a].append(b)
    load = {x: [0] * num_colors for x in v_ids}
    for x in u_ids:
        load[rng.choice(nbrs[x])][color[x]] += 1
    limit = {x: max(h) - min(h) for x, h in load.items()}
    loose = [y for y in v_ids if limit[y] > 0]
    for x in rng.sample(loose, min(tighten, len(loose))):
        limit[x] -= 1
    return Instance.build(num_colors, [(x, color[x]) for x in u_ids],
                          [(x, limit[x]) for x in v_ids], oriented)
