"""End-to-end compression pipeline, statistics, and reporting.

Stage order: intersection graph -> maximal cliques -> fundamental products
-> cover candidates -> smallest exact cover -> output tree.  Every stage is
deterministic given the master seed (sub-stages derive their own streams),
so a report is reproducible byte for byte apart from its optional
timestamp.  Errors raised inside a stage are re-raised with the stage name
prefixed, which the CLI turns into exit codes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .cover import (
    MODE_GLOBAL,
    MODE_PARTITIONED,
    CoverInstance,
    CoverSolution,
    assemble_tree,
    generate_candidates,
    solve_cover_dlx,
    verify_cover,
)
from .errors import CsgcError, ParameterError, UnsatisfiableError
from .geometry import (
    Complement,
    CsgNode,
    Intersection,
    Leaf,
    Union,
    leaf_count,
    tree_membership,
    tree_to_dict,
    union_box,
)
from .geometry.sampling import derive_rng, derive_seed, scene_diameter
from .graph import (
    IntersectionGraph,
    build_intersection_graph,
    clique_sort_key,
    graph_to_dict,
    induced_subgraph,
    maximal_cliques_bk,
)
from .products import ProductTable, candidate_bounds, enumerate_products
from .qubo import (
    EXACT_LIMIT,
    AnnealSchedule,
    build_cover_qubo,
    build_max_clique_qubo,
    default_schedule,
    selection_from_result,
    solve_exact,
    solve_sa,
)

CONFIG_VERSION = 1
REPORT_SCHEMA_VERSION = 1

COVER_SOLVERS = ("dlx", "qubo_exact", "qubo_sa")
CLIQUE_METHODS = ("bk", "qubo_sa_experimental")

#: variable-count ceiling below which a qubo_sa run is cross-checked
#: against the exhaustive solver to report the energy gap
_SA_GAP_CHECK_LIMIT = 20


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs of one compression run; defaults are versioned via CONFIG_VERSION."""

    mode: str = MODE_PARTITIONED
    cover_solver: str = "dlx"
    clique_method: str = "bk"
    graph_samples: int = 4096
    product_samples: int = 2048
    seed: int = 0
    tau_in: float = 0.95
    tau_out: float = 0.05
    penalty_a: float | None = None
    penalty_b: float | None = None
    schedule: AnnealSchedule | None = None
    agreement_points: int = 10_000

    def __post_init__(self):
        if self.mode not in (MODE_PARTITIONED, MODE_GLOBAL):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if self.cover_solver not in COVER_SOLVERS:
            raise ParameterError(f"unknown cover solver {self.cover_solver!r}")
        if self.clique_method not in CLIQUE_METHODS:
            raise ParameterError(f"unknown clique method {self.clique_method!r}")
        if self.graph_samples < 1 or self.product_samples < 1:
            raise ParameterError("sample counts must be >= 1")
        if not (0.0 <= self.tau_out < self.tau_in <= 1.0):
            raise ParameterError("need 0 <= tau_out < tau_in <= 1")

    def to_dict(self) -> dict:
        return {
            "config_version": CONFIG_VERSION,
            "mode": self.mode,
            "cover_solver": self.cover_solver,
            "clique_method": self.clique_method,
            "graph_samples": self.graph_samples,
            "product_samples": self.product_samples,
            "seed": self.seed,
            "tau_in": self.tau_in,
            "tau_out": self.tau_out,
            "penalty_a": self.penalty_a,
            "penalty_b": self.penalty_b,
            "schedule": None
            if self.schedule is None
            else {
                "t_start": self.schedule.t_start,
                "t_end": self.schedule.t_end,
                "sweeps": self.schedule.sweeps,
                "restarts": self.schedule.restarts,
            },
            "agreement_points": self.agreement_points,
        }


@dataclass(frozen=True)
class CompressionReport:
    """Everything one run produced, renderable as stable JSON or text."""

    config: dict
    graph: dict
    cliques: tuple
    n_f: int
    universe: tuple
    bounds: dict
    candidate_count: int
    solver: dict
    cover_selected: tuple
    subsets_used: int
    total_literals: int
    tree: CsgNode
    leaf_count: int
    two_level_leaf_count: int
    reduction_pct: float
    oracle_agreement: float | None
    warnings: tuple

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "config": self.config,
            "graph": self.graph,
            "cliques": [sorted(c) for c in self.cliques],
            "n_f": self.n_f,
            "universe": [sorted(u) for u in self.universe],
            "bounds": self.bounds,
            "candidate_count": self.candidate_count,
            "solver": self.solver,
            "cover": {
                "selected": list(self.cover_selected),
                "subsets_used": self.subsets_used,
                "total_literals": self.total_literals,
            },
            "tree": tree_to_dict(self.tree),
            "leaf_count": self.leaf_count,
            "two_level_leaf_count": self.two_level_leaf_count,
            "reduction_pct": self.reduction_pct,
            "oracle_agreement": self.oracle_agreement,
            "warnings": list(self.warnings),
        }


def _staged(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except CsgcError as exc:
        exc.stage = name
        exc.args = (f"[{name}] {exc.args[0] if exc.args else exc}",)
        raise


def two_level_baseline(table: ProductTable, graph: IntersectionGraph) -> CsgNode:
    """Union of the inside products, one conjunction per product.

    Each product keeps its positive literals plus a negative literal for
    every primitive adjacent to all positives (dropping any would merge the
    cell with a neighbouring one); always-negative primitives that are
    non-adjacent are elided since they cannot intersect the cell anyway.
    """
    universe = table.universe
    if not universe:
        raise UnsatisfiableError("no products lie inside the target solid")
    terms = []
    for positive_set in universe:
        shared = set.intersection(
            *(set(graph.neighbors(p)) for p in sorted(positive_set))
        ) - positive_set
        literals = sorted(
            [(p, True) for p in positive_set] + [(v, False) for v in shared]
        )
        parts = [Leaf(p) if pos else Complement(Leaf(p)) for p, pos in literals]
        terms.append(parts[0] if len(parts) == 1 else Intersection(tuple(parts)))
    return terms[0] if len(terms) == 1 else Union(tuple(terms))


def oracle_agreement(
    tree: CsgNode,
    primitives,
    oracle,
    n_points: int = 10_000,
    seed: int = 0,
    surface_margin_frac: float = 0.01,
) -> tuple[float, int]:
    """Membership agreement between ``tree`` and ``oracle`` on random points.

    Points within ``surface_margin_frac`` of the scene diameter of either
    surface are excluded; returns (agreement fraction, points used).
    """
    prims = tuple(primitives)
    lo, hi = union_box(prims)
    pad = 0.1 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    eps = surface_margin_frac * scene_diameter(prims)
    rng = derive_rng(seed, 0xE7A1)
    kept_match = 0
    kept_total = 0
    attempts = 0
    from .geometry import tree_value

    while kept_total < n_points and attempts < 50 * n_points:
        batch = rng.uniform(lo, hi, size=(4096, 3))
        attempts += batch.shape[0]
        v = tree_value(tree, prims, batch)
        far = np.abs(v) > eps
        if hasattr(oracle, "surface_distance"):
            far &= oracle.surface_distance(batch) > eps
        batch, v = batch[far], v[far]
        if batch.shape[0] == 0:
            continue
        take = min(batch.shape[0], n_points - kept_total)
        batch, v = batch[:take], v[:take]
        truth = np.asarray(oracle.inside(batch))
        kept_match += int(np.sum((v < 0) == truth))
        kept_total += take
    if kept_total == 0:
        return 0.0, 0
    return kept_match / kept_total, kept_total


def cliques_via_qubo_sa(
    graph: IntersectionGraph,
    A: float = 1.0,
    B: float = 2.0,
    schedule: AnnealSchedule | None = None,
    seed: int = 0,
) -> list[frozenset[str]]:
    """Experimental clique partition: peel off one SA-found maximum clique
    at a time until every vertex is assigned.

    Unlike Bron-Kerbosch this returns a vertex-disjoint partition, not all
    maximal cliques, so downstream cover generation may turn out
    infeasible; the pipeline surfaces that as an error.
    """
    remaining = set(graph.vertices)
    cliques: list[frozenset[str]] = []
    round_no = 0
    while remaining:
        sub = induced_subgraph(graph, remaining)
        q, names = build_max_clique_qubo(sub, A, B)
        sched = schedule if schedule is not None else default_schedule(q)
        result = solve_sa(q, sched, seed=derive_seed(seed, 0xC11, round_no))
        members = {names[i] for i in selection_from_result(result)}
        members = _repair_clique(sub, members)
        if not members:
            members = {min(remaining)}
        cliques.append(frozenset(members))
        remaining -= members
        round_no += 1
    return sorted(cliques, key=clique_sort_key)


def _repair_clique(graph: IntersectionGraph, members) -> set[str]:
    """Greedy fix for SA outputs that are not quite cliques."""
    kept: set[str] = set()
    for v in sorted(members):
        if all(graph.has_edge(v, u) for u in kept):
            kept.add(v)
    return kept


def _solve_cover(instance: CoverInstance, cfg: PipelineConfig, seed: int):
    """Dispatch to the configured cover solver; returns (solution, metadata)."""
    if cfg.cover_solver == "dlx":
        return solve_cover_dlx(instance), {"name": "dlx"}

    n = len(instance.candidates)
    if cfg.cover_solver == "qubo_exact" and n > EXACT_LIMIT:
        raise ParameterError(
            f"qubo_exact needs <= {EXACT_LIMIT} candidates, instance has {n}"
        )
    b = 1.0 if cfg.penalty_b is None else cfg.penalty_b
    a = cfg.penalty_a  # None -> n*B + 1 inside the builder
    q, _names = build_cover_qubo(instance, A=a, B=b)
    meta: dict = {
        "name": cfg.cover_solver,
        "variables": n,
        "penalty_a": a if a is not None else len(instance.universe) * b + 1.0,
        "penalty_b": b,
    }
    if cfg.cover_solver == "qubo_exact":
        result = solve_exact(q)
    else:
        sched = cfg.schedule if cfg.schedule is not None else default_schedule(q)
        result = solve_sa(q, sched, seed=seed)
        meta.update(
            {"seed": result.seed, "sweeps": result.sweeps, "restarts": result.restarts}
        )
        if n <= _SA_GAP_CHECK_LIMIT:
            meta["sa_exact_gap"] = result.energy - solve_exact(q).energy
    meta["energy"] = result.energy

    selected = selection_from_result(result)
    check = verify_cover(instance, selected)
    if not check.valid:
        raise UnsatisfiableError(
            f"{cfg.cover_solver} did not reach an exact cover "
            f"({len(check.uncovered)} uncovered, {len(check.double_covered)} doubly "
            "covered); no cover may exist, or the schedule is too short"
        )
    literals = sum(instance.candidates[i].literal_count for i in selected)
    return CoverSolution(selected, len(selected), literals), meta


def _require_inside_products(table: ProductTable) -> None:
    if not table.universe:
        raise UnsatisfiableError(
            "no fundamental product lies inside the target solid; "
            "the primitives do not describe it"
        )


def _cliques_for(graph: IntersectionGraph, cfg: PipelineConfig):
    if cfg.clique_method == "bk":
        return maximal_cliques_bk(graph)
    return cliques_via_qubo_sa(
        graph, schedule=cfg.schedule, seed=derive_seed(cfg.seed, 3)
    )


def _finish_report(
    cfg: PipelineConfig,
    graph: IntersectionGraph,
    cliques,
    table: ProductTable,
    instance: CoverInstance,
    solution: CoverSolution,
    solver_meta: dict,
    agreement: float | None,
    warnings: list[str],
) -> CompressionReport:
    tree = _staged("assemble", assemble_tree, solution, instance)
    check = verify_cover(instance, solution.selected)
    if not check.valid:
        raise UnsatisfiableError("internal error: solver returned a non-cover")
    baseline = two_level_baseline(table, graph)
    two_level = leaf_count(baseline)
    leaves = leaf_count(tree)
    assert leaves == solution.total_literals
    bounds = candidate_bounds(table, cliques)
    if agreement is not None and agreement < 0.999:
        warnings.append(
            f"assembled tree agrees with the oracle on only {agreement:.2%} "
            "of off-surface points"
        )
    return CompressionReport(
        config=cfg.to_dict(),
        graph=graph_to_dict(graph),
        cliques=tuple(cliques),
        n_f=table.n_f,
        universe=table.universe,
        bounds={
            "global": bounds.global_bound,
            "partitioned": bounds.partitioned_bound,
            "per_clique_nf": list(bounds.per_clique_nf),
        },
        candidate_count=len(instance.candidates),
        solver=solver_meta,
        cover_selected=tuple(
            instance.candidates[i].name for i in solution.selected
        ),
        subsets_used=solution.subsets_used,
        total_literals=solution.total_literals,
        tree=tree,
        leaf_count=leaves,
        two_level_leaf_count=two_level,
        reduction_pct=1.0 - leaves / two_level,
        oracle_agreement=agreement,
        warnings=tuple(warnings),
    )


def compress(primitives, oracle, cfg: PipelineConfig = PipelineConfig()) -> CompressionReport:
    """Full geometric pipeline: primitives + oracle -> compressed CSG tree."""
    prims = tuple(primitives)
    warnings: list[str] = []
    graph = _staged(
        "graph",
        build_intersection_graph,
        prims,
        count=cfg.graph_samples,
        seed=derive_seed(cfg.seed, 1),
    )
    cliques = _staged("cliques", _cliques_for, graph, cfg)
    table = _staged(
        "products",
        enumerate_products,
        prims,
        graph,
        oracle,
        samples_per_region=cfg.product_samples,
        seed=derive_seed(cfg.seed, 2),
        tau_in=cfg.tau_in,
        tau_out=cfg.tau_out,
    )
    for p in table.mixed:
        warnings.append(
            f"product {'&'.join(sorted(p.positive_set))} is mixed "
            f"(inside fraction {p.inside_fraction:.3f}); treated as outside"
        )
    _staged("products", _require_inside_products, table)
    instance = _staged(
        "candidates", generate_candidates, table, cliques, graph, cfg.mode
    )
    solution, solver_meta = _staged(
        "cover", _solve_cover, instance, cfg, derive_seed(cfg.seed, 4)
    )
    tree = assemble_tree(solution, instance)
    agreement, _used = _staged(
        "evaluate",
        oracle_agreement,
        tree,
        prims,
        oracle,
        n_points=cfg.agreement_points,
        seed=derive_seed(cfg.seed, 5),
    )
    return _finish_report(
        cfg, graph, cliques, table, instance, solution, solver_meta,
        agreement, warnings,
    )


def compress_abstract(
    graph: IntersectionGraph,
    table: ProductTable,
    cfg: PipelineConfig = PipelineConfig(),
) -> CompressionReport:
    """Combinatorial pipeline over an abstract instance (no geometry).

    The exactness of the output is checked structurally: the selected
    candidates must partition the universe, which in abstract mode *is*
    the semantics of the tree.
    """
    warnings: list[str] = []
    cliques = _staged("cliques", _cliques_for, graph, cfg)
    for p in table.mixed:
        warnings.append(
            f"product {'&'.join(sorted(p.positive_set))} is mixed; treated as outside"
        )
    _staged("products", _require_inside_products, table)
    instance = _staged(
        "candidates", generate_candidates, table, cliques, graph, cfg.mode
    )
    solution, solver_meta = _staged(
        "cover", _solve_cover, instance, cfg, derive_seed(cfg.seed, 4)
    )
    return _finish_report(
        cfg, graph, cliques, table, instance, solution, solver_meta, None, warnings
    )


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def report_stats(
    report: CompressionReport, fmt: str = "json", timestamp: str | None = None
) -> str:
    """Render a report as versioned JSON (stable field order) or as text."""
    data = report.to_dict()
    if timestamp is not None:
        data = {"schema_version": data["schema_version"], "timestamp": timestamp,
                **{k: v for k, v in data.items() if k != "schema_version"}}
    if fmt == "json":
        return json.dumps(data, indent=2) + "\n"
    if fmt != "text":
        raise ParameterError(f"unknown report format {fmt!r}")
    lines = [
        f"primitives        : {len(report.graph['vertices'])}",
        f"graph edges       : {len(report.graph['edges'])}",
        f"maximal cliques   : {len(report.cliques)}"
        f" {[''.join(sorted(c)) for c in report.cliques]}",
        f"products (n_f)    : {report.n_f}",
        f"inside products   : {len(report.universe)}",
        f"bound global      : {report.bounds['global']}",
        f"bound partitioned : {report.bounds['partitioned']}",
        f"candidates |V|    : {report.candidate_count}",
        f"cover solver      : {report.solver['name']}",
        f"cover             : {report.subsets_used} subsets, "
        f"{report.total_literals} literals -> {list(report.cover_selected)}",
        f"leaf count        : {report.leaf_count}",
        f"two-level leaves  : {report.two_level_leaf_count}",
        f"reduction         : {report.reduction_pct:.1%}",
        f"oracle agreement  : "
        + ("n/a" if report.oracle_agreement is None else f"{report.oracle_agreement:.4f}"),
        f"warnings          : {list(report.warnings)}",
    ]
    return "\n".join(lines) + "\n"
