"""Non-empty fundamental products and the candidate-count bounds.

A fundamental product assigns every primitive either itself or its
complement; the non-empty ones are the atomic cells the primitive
arrangement carves out of space.  A product's positive set must be a
clique of the intersection graph (two non-overlapping positives force the
cell empty), which turns the naive 2^|P| scan into a walk over the clique
tree.  Each candidate cell is rejection-sampled; cells with witnesses are
classified against the target oracle by the fraction of witnesses inside.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import FileFormatError
from .geometry import check_primitive_set, index_primitives, sample_region
from .graph import IntersectionGraph, clique_sort_key
from .geometry.sampling import derive_seed

_SEED_NAMESPACE = 0x50  # keeps product sub-streams apart from other modules'

LABEL_INSIDE = "inside"
LABEL_OUTSIDE = "outside"
LABEL_MIXED = "mixed"

DEFAULT_PRODUCT_SAMPLES = 2048
DEFAULT_TAU_IN = 0.95
DEFAULT_TAU_OUT = 0.05


def product_sort_key(positive_set) -> tuple:
    """Canonical product order: size ascending, then lexicographic ids."""
    return (len(positive_set), tuple(sorted(positive_set)))


@dataclass(frozen=True, eq=False)
class FundamentalProduct:
    """One non-empty cell, identified by its positive set.

    ``samples`` holds the witness points that proved non-emptiness (None
    for abstract instances, where non-emptiness is asserted by the input).
    """

    positive_set: frozenset[str]
    label: str
    inside_fraction: float
    samples: np.ndarray | None = None

    def __post_init__(self):
        if not self.positive_set:
            raise ValueError("a fundamental product needs a non-empty positive set")
        if self.label not in (LABEL_INSIDE, LABEL_OUTSIDE, LABEL_MIXED):
            raise ValueError(f"unknown product label {self.label!r}")
        if self.samples is not None:
            pts = np.asarray(self.samples, dtype=float).reshape(-1, 3)
            if pts.shape[0] == 0:
                raise ValueError("witness sample list must be non-empty")
            pts.setflags(write=False)
            object.__setattr__(self, "samples", pts)

    def sign_vector(self, primitive_ids) -> dict[str, bool]:
        """Total sign mapping over the given primitive universe."""
        return {pid: pid in self.positive_set for pid in primitive_ids}


@dataclass(frozen=True, eq=False)
class ProductTable:
    """All non-empty fundamental products plus the inside universe U."""

    primitive_ids: tuple[str, ...]
    products: tuple[FundamentalProduct, ...]

    def __post_init__(self):
        prods = tuple(
            sorted(self.products, key=lambda p: product_sort_key(p.positive_set))
        )
        seen = set()
        for p in prods:
            if p.positive_set in seen:
                raise ValueError(f"duplicate product {sorted(p.positive_set)}")
            if not p.positive_set <= set(self.primitive_ids):
                raise ValueError(
                    f"product {sorted(p.positive_set)} references unknown primitives"
                )
            seen.add(p.positive_set)
        object.__setattr__(self, "primitive_ids", tuple(self.primitive_ids))
        object.__setattr__(self, "products", prods)
        object.__setattr__(self, "_by_set", {p.positive_set: p for p in prods})

    @property
    def n_f(self) -> int:
        return len(self.products)

    @property
    def universe(self) -> tuple[frozenset[str], ...]:
        return tuple(
            p.positive_set for p in self.products if p.label == LABEL_INSIDE
        )

    @property
    def mixed(self) -> tuple[FundamentalProduct, ...]:
        return tuple(p for p in self.products if p.label == LABEL_MIXED)

    def get(self, positive_set) -> FundamentalProduct | None:
        return self._by_set.get(frozenset(positive_set))


def enumerate_cliques(graph: IntersectionGraph):
    """All non-empty cliques (not only maximal ones), in canonical order.

    DFS over sorted vertex ids; supersets of non-cliques are never visited.
    """
    order = sorted(graph.vertices)
    out: list[frozenset[str]] = []

    def extend(members: tuple[str, ...], candidates: list[str]) -> None:
        for k, v in enumerate(candidates):
            new = members + (v,)
            out.append(frozenset(new))
            nv = graph.neighbors(v)
            extend(new, [u for u in candidates[k + 1:] if u in nv])

    extend((), order)
    return sorted(out, key=product_sort_key)


def enumerate_products(
    primitives,
    graph: IntersectionGraph,
    oracle,
    samples_per_region: int = DEFAULT_PRODUCT_SAMPLES,
    seed: int = 0,
    tau_in: float = DEFAULT_TAU_IN,
    tau_out: float = DEFAULT_TAU_OUT,
) -> ProductTable:
    """Sample every clique-shaped cell and classify it against the oracle.

    A cell is kept iff at least one sample survives rejection; the
    all-negative product (empty positive set) is excluded by construction.
    Mixed cells (inside fraction strictly between the thresholds) signal
    that the primitives do not cleanly describe the target; they are kept
    in the table with the ``mixed`` label and surfaced by the pipeline as
    warnings, not failures.
    """
    prims = check_primitive_set(primitives)
    by_id = index_primitives(prims)
    if set(graph.vertices) != set(by_id):
        raise ValueError("graph and primitive set disagree")
    if not (0.0 <= tau_out < tau_in <= 1.0):
        raise ValueError("thresholds must satisfy 0 <= tau_out < tau_in <= 1")

    order = sorted(by_id)
    products = []
    for idx, positive_set in enumerate(enumerate_cliques(graph)):
        positive = [by_id[i] for i in sorted(positive_set)]
        negative = [by_id[i] for i in order if i not in positive_set]
        region_seed = derive_seed(seed, _SEED_NAMESPACE, idx)
        samples = sample_region(positive, negative, samples_per_region, region_seed)
        if samples.shape[0] == 0:
            continue
        inside = np.asarray(oracle.inside(samples))
        frac = float(np.mean(inside))
        if frac >= tau_in:
            label = LABEL_INSIDE
        elif frac <= tau_out:
            label = LABEL_OUTSIDE
        else:
            label = LABEL_MIXED
        products.append(
            FundamentalProduct(positive_set, label, frac, samples)
        )
    return ProductTable(tuple(p.pid for p in prims), tuple(products))


@dataclass(frozen=True)
class CandidateBounds:
    """Upper bounds on the number of cover candidates."""

    global_bound: int                      # 2^n_f - 1
    partitioned_bound: int | None          # sum_j (2^n_f^j - 1)
    per_clique_nf: tuple[int, ...]


def candidate_bounds(table: ProductTable, cliques=None) -> CandidateBounds:
    """Evaluate the global and (optionally) partitioned candidate bounds.

    ``n_f^j`` counts the table products whose positive set lies inside
    clique j.  Python integers keep the 2^n_f term exact for any n_f.
    """
    global_bound = 2 ** table.n_f - 1
    if cliques is None:
        return CandidateBounds(global_bound, None, ())
    cliques = sorted((frozenset(c) for c in cliques), key=clique_sort_key)
    covered = set().union(*cliques) if cliques else set()
    if covered != set(table.primitive_ids):
        raise ValueError("cliques must cover all primitives")
    per = tuple(
        sum(1 for p in table.products if p.positive_set <= c) for c in cliques
    )
    part = sum(2**n - 1 for n in per)
    return CandidateBounds(global_bound, part, per)


# ---------------------------------------------------------------------------
# Abstract-instance JSON: {"primitives": [...], "edges": [...],
#   "products": [{"positives": [...], "inside": bool}]}
# Bypasses geometry entirely for combinatorial tests.
# ---------------------------------------------------------------------------

def abstract_instance_from_dict(obj: dict) -> tuple[IntersectionGraph, ProductTable]:
    try:
        ids = tuple(str(v) for v in obj["primitives"])
        edges = frozenset(
            (str(a), str(b)) if str(a) < str(b) else (str(b), str(a))
            for a, b in obj.get("edges", [])
        )
        graph = IntersectionGraph(ids, edges)
        products = []
        for rec in obj["products"]:
            positives = frozenset(str(v) for v in rec["positives"])
            label = LABEL_INSIDE if rec["inside"] else LABEL_OUTSIDE
            products.append(
                FundamentalProduct(
                    positives, label, 1.0 if rec["inside"] else 0.0, None
                )
            )
        table = ProductTable(ids, tuple(products))
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"bad abstract instance: {exc}") from exc
    for p in table.products:
        if not graph.is_clique(p.positive_set):
            raise FileFormatError(
                f"abstract product {sorted(p.positive_set)} is not a clique of the graph"
            )
    return graph, table


def load_abstract_instance(path) -> tuple[IntersectionGraph, ProductTable]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return abstract_instance_from_dict(json.load(fh))
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON ({exc})") from exc


def table_to_dict(table: ProductTable, graph: IntersectionGraph) -> dict:
    """Serialise a table (plus its graph) so it reloads as an abstract instance."""
    return {
        "primitives": list(table.primitive_ids),
        "edges": [list(e) for e in sorted(graph.edges)],
        "products": [
            {
                "positives": sorted(p.positive_set),
                "inside": p.label == LABEL_INSIDE,
                "label": p.label,
                "inside_fraction": p.inside_fraction,
                "witnesses": 0 if p.samples is None else int(p.samples.shape[0]),
            }
            for p in table.products
        ],
    }
