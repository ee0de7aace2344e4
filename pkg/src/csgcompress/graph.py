"""Primitive intersection graph and maximal clique enumeration.

Vertices are primitive ids; an edge means the two solids' volumes overlap.
Overlap is detected by sampling: each primitive gets a deterministic batch
of interior points (its own seed derived from the master seed), and a pair
is connected when either batch hits the other solid.  An AABB prefilter
skips provably disjoint pairs.  Maximal cliques come from Bron-Kerbosch
with pivoting; all outputs are canonically ordered so downstream candidate
generation is deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import FileFormatError
from .geometry import (
    aabb,
    aabbs_overlap,
    check_primitive_set,
    sample_region,
    signed_distance,
)
from .geometry.sampling import derive_seed

DEFAULT_GRAPH_SAMPLES = 4096

_SEED_NAMESPACE = 0x47  # keeps graph sub-streams apart from other modules'


@dataclass(frozen=True, eq=False)
class IntersectionGraph:
    """Undirected graph over primitive ids; edges stored as sorted pairs."""

    vertices: tuple[str, ...]
    edges: frozenset[tuple[str, str]]

    def __post_init__(self):
        verts = tuple(self.vertices)
        seen = set()
        for v in verts:
            if v in seen:
                raise ValueError(f"duplicate vertex {v!r}")
            seen.add(v)
        edges = set()
        for e in self.edges:
            a, b = e
            if a == b:
                raise ValueError(f"self-loop on {a!r}")
            if a not in seen or b not in seen:
                raise ValueError(f"edge {e!r} references unknown vertex")
            edges.add((a, b) if a < b else (b, a))
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", frozenset(edges))
        nbrs = {v: set() for v in verts}
        for a, b in edges:
            nbrs[a].add(b)
            nbrs[b].add(a)
        object.__setattr__(
            self, "_neighbors", {v: frozenset(s) for v, s in nbrs.items()}
        )

    def neighbors(self, v: str) -> frozenset[str]:
        return self._neighbors[v]

    def has_edge(self, a: str, b: str) -> bool:
        return ((a, b) if a < b else (b, a)) in self.edges

    def is_clique(self, members) -> bool:
        ms = sorted(members)
        if not ms:
            return False
        return all(
            self.has_edge(ms[i], ms[j])
            for i in range(len(ms))
            for j in range(i + 1, len(ms))
        )


def clique_sort_key(members) -> tuple:
    """Canonical clique order: size descending, then lexicographic ids."""
    return (-len(members), tuple(sorted(members)))


def build_intersection_graph(primitives, count: int = DEFAULT_GRAPH_SAMPLES,
                             seed: int = 0) -> IntersectionGraph:
    """Detect pairwise volume overlaps by point sampling.

    Misses are possible for sliver overlaps thinner than the sampling
    resolution; raise ``count`` to tighten.  Result depends only on
    (primitives, count, seed), not on evaluation order.
    """
    prims = check_primitive_set(primitives)
    boxes = [aabb(p) for p in prims]
    samples = [
        sample_region([p], [], count, _primitive_seed(seed, i))
        for i, p in enumerate(prims)
    ]
    edges = set()
    for i in range(len(prims)):
        for j in range(i + 1, len(prims)):
            if not aabbs_overlap(boxes[i], boxes[j]):
                continue
            hit = False
            if samples[i].shape[0]:
                hit = bool(np.any(signed_distance(prims[j], samples[i]) < 0))
            if not hit and samples[j].shape[0]:
                hit = bool(np.any(signed_distance(prims[i], samples[j]) < 0))
            if hit:
                a, b = prims[i].pid, prims[j].pid
                edges.add((a, b) if a < b else (b, a))
    return IntersectionGraph(tuple(p.pid for p in prims), frozenset(edges))


def _primitive_seed(master: int, index: int) -> int:
    # One sub-stream per primitive so pairwise tests are order independent
    # and edge detection is monotone in the sample count.
    return derive_seed(master, _SEED_NAMESPACE, index)


def induced_subgraph(graph: IntersectionGraph, keep) -> IntersectionGraph:
    """Subgraph on ``keep`` vertices, preserving vertex order."""
    keep = set(keep)
    return IntersectionGraph(
        tuple(v for v in graph.vertices if v in keep),
        frozenset(e for e in graph.edges if e[0] in keep and e[1] in keep),
    )


def maximal_cliques_bk(graph: IntersectionGraph) -> list[frozenset[str]]:
    """All maximal cliques via Bron-Kerbosch with pivoting.

    Output is sorted canonically (size descending, then lexicographic
    member ids); isolated vertices come back as singleton cliques.
    """
    cliques: list[frozenset[str]] = []

    def expand(r: set[str], p: set[str], x: set[str]) -> None:
        if not p and not x:
            cliques.append(frozenset(r))
            return
        # Pivot with the most candidate neighbours; ties to the smallest id
        # keep the recursion deterministic.
        pivot = max(sorted(p | x), key=lambda u: len(p & graph.neighbors(u)))
        for v in sorted(p - graph.neighbors(pivot)):
            nv = graph.neighbors(v)
            expand(r | {v}, p & nv, x & nv)
            p.remove(v)
            x.add(v)

    expand(set(), set(graph.vertices), set())
    return sorted(cliques, key=clique_sort_key)


# ---------------------------------------------------------------------------
# Graph JSON: {"vertices": [...], "edges": [["A", "B"], ...]}
# ---------------------------------------------------------------------------

def graph_to_dict(graph: IntersectionGraph) -> dict:
    return {
        "vertices": list(graph.vertices),
        "edges": [list(e) for e in sorted(graph.edges)],
    }


def graph_from_dict(obj: dict) -> IntersectionGraph:
    try:
        vertices = tuple(str(v) for v in obj["vertices"])
        edges = frozenset(
            (str(a), str(b)) if str(a) < str(b) else (str(b), str(a))
            for a, b in obj.get("edges", [])
        )
        return IntersectionGraph(vertices, edges)
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"bad graph record: {exc}") from exc


def load_graph(path) -> IntersectionGraph:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return graph_from_dict(json.load(fh))
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON ({exc})") from exc


def save_graph(graph: IntersectionGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_dict(graph), fh, indent=2)
        fh.write("\n")
