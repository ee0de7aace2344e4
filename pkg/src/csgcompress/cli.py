"""csgc: command-line front end for the compression pipeline.

Exit codes: 0 success, 2 infeasible or unsatisfiable instance, 3 input or
parse error, 4 parameter error.
"""

from __future__ import annotations

import datetime
import json
import sys

import click

from .cover import (
    cover_instance_to_dict,
    load_cover_instance,
    solution_to_dict,
    solve_cover_dlx,
)
from .errors import (
    CsgcError,
    FileFormatError,
    InfeasibleInstanceError,
    ParameterError,
    StructuralError,
    UnsatisfiableError,
    UnsupportedOracleError,
)
from .geometry import (
    CloudOracle,
    TreeOracle,
    load_cloud,
    load_primitives,
    tree_from_dict,
    tree_to_dict,
)
from .graph import graph_to_dict, load_graph, maximal_cliques_bk
from .pipeline import (
    CLIQUE_METHODS,
    COVER_SOLVERS,
    PipelineConfig,
    cliques_via_qubo_sa,
    compress as run_compress,
    compress_abstract,
    oracle_agreement,
    report_stats,
)
from .products import load_abstract_instance, table_to_dict, enumerate_products
from .qubo import (
    AnnealSchedule,
    build_cover_qubo,
    build_max_clique_qubo,
    default_schedule,
    export_qubo,
    import_qubo,
    solve_exact,
    solve_sa,
)

EXIT_INFEASIBLE = 2
EXIT_INPUT = 3
EXIT_PARAMETER = 4

_in_file = click.Path(exists=True, dir_okay=False)


def _parse_schedule(text: str | None) -> AnnealSchedule | None:
    if text is None:
        return None
    parts = text.split(",")
    if len(parts) != 4:
        raise ParameterError("--schedule expects t_start,t_end,sweeps,restarts")
    try:
        return AnnealSchedule(
            float(parts[0]), float(parts[1]), int(parts[2]), int(parts[3])
        )
    except ValueError as exc:
        raise ParameterError(f"bad --schedule value: {exc}") from exc


def _emit(text: str, out: str | None) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_oracle(primitives, cloud_path, tree_path):
    if (cloud_path is None) == (tree_path is None):
        raise ParameterError("provide exactly one of --cloud or --tree")
    if cloud_path is not None:
        return CloudOracle(load_cloud(cloud_path))
    with open(tree_path, "r", encoding="utf-8") as fh:
        try:
            tree = tree_from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{tree_path}: invalid JSON ({exc})") from exc
    return TreeOracle(tree, primitives)


@click.group()
@click.version_option(package_name="csgcompress", prog_name="csgc")
def cli():
    """Lossy point-cloud-to-CSG compression via smallest exact cover."""


@cli.command(name="compress")
@click.option("--primitives", "primitives_path", type=_in_file,
              help="Primitive set JSON.")
@click.option("--cloud", "cloud_path", type=_in_file,
              help="Oriented point cloud describing the target solid.")
@click.option("--tree", "tree_path", type=_in_file,
              help="Ground-truth CSG tree JSON describing the target solid.")
@click.option("--abstract", "abstract_path", type=_in_file,
              help="Abstract instance JSON (bypasses geometry).")
@click.option("--mode", type=click.Choice(["partitioned", "global"]),
              default="partitioned", show_default=True)
@click.option("--solver", type=click.Choice(list(COVER_SOLVERS)), default="dlx",
              show_default=True)
@click.option("--clique-method", type=click.Choice(list(CLIQUE_METHODS)),
              default="bk", show_default=True)
@click.option("--samples", type=int, default=None,
              help="Sample count for both graph and product sampling.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--penalty-a", type=float, default=None)
@click.option("--penalty-b", type=float, default=None)
@click.option("--schedule", "schedule_text", type=str, default=None,
              help="SA schedule t_start,t_end,sweeps,restarts.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the report here instead of stdout.")
@click.option("--tree-out", type=click.Path(dir_okay=False), default=None,
              help="Also write the output tree JSON here.")
@click.option("--format", "fmt", type=click.Choice(["json", "text"]),
              default="json", show_default=True)
@click.option("--no-timestamp", is_flag=True,
              help="Omit the timestamp for byte-identical reports.")
def compress_cmd(primitives_path, cloud_path, tree_path, abstract_path, mode,
                 solver, clique_method, samples, seed, penalty_a, penalty_b,
                 schedule_text, out, tree_out, fmt, no_timestamp):
    """Compress a target solid into a small CSG tree."""
    kwargs = dict(
        mode=mode,
        cover_solver=solver,
        clique_method=clique_method,
        seed=seed,
        penalty_a=penalty_a,
        penalty_b=penalty_b,
        schedule=_parse_schedule(schedule_text),
    )
    if samples is not None:
        kwargs.update(graph_samples=samples, product_samples=samples)
    cfg = PipelineConfig(**kwargs)
    if abstract_path is not None:
        if primitives_path or cloud_path or tree_path:
            raise ParameterError("--abstract excludes the geometric inputs")
        graph, table = load_abstract_instance(abstract_path)
        report = compress_abstract(graph, table, cfg)
    else:
        if primitives_path is None:
            raise ParameterError("--primitives is required (or use --abstract)")
        prims = load_primitives(primitives_path)
        oracle = _load_oracle(prims, cloud_path, tree_path)
        report = run_compress(prims, oracle, cfg)
    stamp = None if no_timestamp else _now()
    _emit(report_stats(report, fmt=fmt, timestamp=stamp), out)
    if tree_out is not None:
        with open(tree_out, "w", encoding="utf-8") as fh:
            json.dump(tree_to_dict(report.tree), fh, indent=2)
            fh.write("\n")


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


@cli.command(name="cliques")
@click.option("--graph", "graph_path", type=_in_file, required=True,
              help="Graph JSON with vertices and edges.")
@click.option("--method", type=click.Choice(list(CLIQUE_METHODS)), default="bk",
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--penalty-a", type=float, default=1.0, show_default=True)
@click.option("--penalty-b", type=float, default=2.0, show_default=True)
@click.option("--schedule", "schedule_text", type=str, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def cliques_cmd(graph_path, method, seed, penalty_a, penalty_b, schedule_text, out):
    """Enumerate maximal cliques (bk) or peel SA-found cliques (experimental)."""
    graph = load_graph(graph_path)
    if method == "bk":
        cliques = maximal_cliques_bk(graph)
    else:
        cliques = cliques_via_qubo_sa(
            graph, A=penalty_a, B=penalty_b,
            schedule=_parse_schedule(schedule_text), seed=seed,
        )
    payload = {"method": method, "cliques": [sorted(c) for c in cliques]}
    _emit(json.dumps(payload, indent=2) + "\n", out)


@cli.command(name="products")
@click.option("--primitives", "primitives_path", type=_in_file, required=True)
@click.option("--cloud", "cloud_path", type=_in_file, default=None)
@click.option("--tree", "tree_path", type=_in_file, default=None)
@click.option("--samples", type=int, default=2048, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def products_cmd(primitives_path, cloud_path, tree_path, samples, seed, out):
    """Enumerate and classify the non-empty fundamental products."""
    from .graph import build_intersection_graph

    prims = load_primitives(primitives_path)
    oracle = _load_oracle(prims, cloud_path, tree_path)
    graph = build_intersection_graph(prims, count=samples, seed=seed)
    table = enumerate_products(
        prims, graph, oracle, samples_per_region=samples, seed=seed
    )
    _emit(json.dumps(table_to_dict(table, graph), indent=2) + "\n", out)


@cli.command(name="cover")
@click.option("--instance", "instance_path", type=_in_file, required=True,
              help="Cover instance JSON.")
@click.option("--solver", type=click.Choice(list(COVER_SOLVERS)), default="dlx",
              show_default=True)
@click.option("--penalty-a", type=float, default=None)
@click.option("--penalty-b", type=float, default=1.0, show_default=True)
@click.option("--schedule", "schedule_text", type=str, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def cover_cmd(instance_path, solver, penalty_a, penalty_b, schedule_text, seed, out):
    """Solve a smallest-exact-cover instance."""
    from .cover import verify_cover, CoverSolution
    from .qubo import selection_from_result

    instance = load_cover_instance(instance_path)
    meta: dict = {"solver": solver}
    if solver == "dlx":
        solution = solve_cover_dlx(instance)
    else:
        q, _ = build_cover_qubo(instance, A=penalty_a, B=penalty_b)
        if solver == "qubo_exact":
            result = solve_exact(q)
        else:
            sched = _parse_schedule(schedule_text) or default_schedule(q)
            result = solve_sa(q, sched, seed=seed)
            meta.update({"seed": result.seed, "sweeps": result.sweeps,
                         "restarts": result.restarts})
        meta["energy"] = result.energy
        selected = selection_from_result(result)
        check = verify_cover(instance, selected)
        if not check.valid:
            raise UnsatisfiableError(
                f"{solver} did not reach an exact cover; no cover may exist, "
                "or the schedule is too short"
            )
        literals = sum(instance.candidates[i].literal_count for i in selected)
        solution = CoverSolution(selected, len(selected), literals)
    payload = {**solution_to_dict(solution, instance), **meta}
    _emit(json.dumps(payload, indent=2) + "\n", out)


@cli.group(name="qubo")
def qubo_group():
    """Work with QUBO model files (qbsolv-compatible text format)."""


@qubo_group.command(name="solve")
@click.option("--model", "model_path", type=_in_file, required=True)
@click.option("--solver", type=click.Choice(["exact", "sa"]), default="sa",
              show_default=True)
@click.option("--schedule", "schedule_text", type=str, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def qubo_solve_cmd(model_path, solver, schedule_text, seed, out):
    """Minimise a QUBO model file."""
    q = import_qubo(model_path)
    if solver == "exact":
        result = solve_exact(q)
    else:
        sched = _parse_schedule(schedule_text) or default_schedule(q)
        result = solve_sa(q, sched, seed=seed)
    payload = {
        "assignment": result.assignment,
        "energy": result.energy,
        "solver": result.solver,
        "seed": result.seed,
        "sweeps": result.sweeps,
        "restarts": result.restarts,
    }
    _emit(json.dumps(payload, indent=2) + "\n", out)


@qubo_group.command(name="export")
@click.option("--instance", "instance_path", type=_in_file, default=None,
              help="Cover instance JSON -> smallest-exact-cover QUBO.")
@click.option("--graph", "graph_path", type=_in_file, default=None,
              help="Graph JSON -> maximum-clique QUBO.")
@click.option("--penalty-a", type=float, default=None)
@click.option("--penalty-b", type=float, default=None)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def qubo_export_cmd(instance_path, graph_path, penalty_a, penalty_b, out):
    """Export a problem as an annealer-ready QUBO file."""
    if (instance_path is None) == (graph_path is None):
        raise ParameterError("provide exactly one of --instance or --graph")
    if instance_path is not None:
        instance = load_cover_instance(instance_path)
        q, names = build_cover_qubo(
            instance,
            A=penalty_a,
            B=1.0 if penalty_b is None else penalty_b,
        )
    else:
        graph = load_graph(graph_path)
        q, names = build_max_clique_qubo(
            graph,
            A=1.0 if penalty_a is None else penalty_a,
            B=2.0 if penalty_b is None else penalty_b,
        )
    export_qubo(q, out, names=names)


@cli.command(name="eval")
@click.option("--tree", "tree_path", type=_in_file, required=True,
              help="CSG tree JSON to evaluate.")
@click.option("--primitives", "primitives_path", type=_in_file, required=True)
@click.option("--cloud", "cloud_path", type=_in_file, required=True,
              help="Oriented point cloud serving as the reference oracle.")
@click.option("--samples", type=int, default=10_000, show_default=True,
              help="Number of off-surface query points.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def eval_cmd(tree_path, primitives_path, cloud_path, samples, seed, out):
    """Agreement between a tree and a point-cloud oracle."""
    prims = load_primitives(primitives_path)
    with open(tree_path, "r", encoding="utf-8") as fh:
        try:
            tree = tree_from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{tree_path}: invalid JSON ({exc})") from exc
    oracle = CloudOracle(load_cloud(cloud_path))
    agreement, used = oracle_agreement(
        tree, prims, oracle, n_points=samples, seed=seed
    )
    payload = {"agreement": agreement, "points_used": used}
    _emit(json.dumps(payload, indent=2) + "\n", out)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.ClickException as exc:
        exc.show()
        return EXIT_INPUT
    except click.Abort:
        return 1
    except (InfeasibleInstanceError, UnsatisfiableError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INFEASIBLE
    except ParameterError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_PARAMETER
    except (FileFormatError, StructuralError, UnsupportedOracleError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INPUT
    except CsgcError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
