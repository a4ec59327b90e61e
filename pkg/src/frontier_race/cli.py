"""Command-line front end: solve, benchmark, tune, and export plot data."""

from __future__ import annotations

import csv
import io
import json
import os
import sys

import click

from frontier_race import evaluation, harness, sampling, solvers
from frontier_race.dataset import DatasetFormatError, load_uef_file, load_universe_file
from frontier_race.model import (
    InfeasibleSpecError,
    ProblemSpec,
    lambda_grid,
    portfolio_stats,
)
from frontier_race.sampling import RngStream

EXIT_USAGE = 2
EXIT_FILE = 3
EXIT_INFEASIBLE = 4

FORMATS = click.Choice(["json", "csv", "table"])


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guard(fn):
    """Map library errors onto the documented exit codes."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except InfeasibleSpecError as exc:
            _fail(EXIT_INFEASIBLE, str(exc))
        except DatasetFormatError as exc:
            _fail(EXIT_FILE, str(exc))
        except OSError as exc:
            _fail(EXIT_FILE, str(exc))

    wrapper.__name__ = fn.__name__
    return wrapper


def _apply_config(ctx: click.Context, config_path: str | None):
    """Overlay flat `key = value` config-file entries under explicit flags."""
    if config_path is None:
        return
    try:
        with open(config_path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        _fail(EXIT_FILE, str(exc))
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            _fail(EXIT_USAGE, f"{config_path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        param = key.replace("-", "_")
        if param not in ctx.params:
            _fail(EXIT_USAGE, f"{config_path}:{lineno}: unknown option {key!r}")
        source = ctx.get_parameter_source(param)
        if source is not None and source.name == "COMMANDLINE":
            continue  # explicit flags win over the file
        target = next(p for p in ctx.command.params if p.name == param)
        try:
            ctx.params[param] = target.type.convert(value, target, ctx)
        except click.UsageError as exc:
            _fail(EXIT_USAGE, f"{config_path}:{lineno}: {exc}")


def _make_budget(budget: float | None, iterations: int | None) -> solvers.Budget:
    if budget is not None and iterations is not None:
        raise click.UsageError("--budget and --iterations are mutually exclusive")
    if budget is None and iterations is None:
        raise click.UsageError("one of --budget or --iterations is required")
    if iterations is not None:
        return solvers.Budget.of_iterations(iterations)
    return solvers.Budget.of_seconds(budget)


def _g(x: float) -> str:
    return f"{x:.17g}"


def _emit_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_g(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _emit_table(header: list[str], rows: list[list]) -> str:
    cells = [header] + [
        [f"{v:.4f}" if isinstance(v, float) else str(v) for v in row] for row in rows
    ]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    return "\n".join(
        "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
        for row in cells
    ) + "\n"


@click.group()
def main():
    """Time-budgeted metaheuristics for cardinality-constrained portfolio selection."""


@main.command("run")
@click.option("--data", required=True, help="Path to a `port` asset file.")
@click.option("--algo", required=True, type=click.Choice(["sa", "ts", "ga"]))
@click.option("--budget", type=float, default=None, help="Wall-clock budget in seconds.")
@click.option("--iterations", type=int, default=None, help="Iteration cap (deterministic mode).")
@click.option("--seed", type=int, default=0)
@click.option("--lambdas", type=int, default=50, show_default=True)
@click.option("--k", type=int, default=10, show_default=True)
@click.option("--min-weight", type=float, default=0.01, show_default=True)
@click.option("--uef", default=None, help="Path to a `portef` frontier file; adds an error report.")
@click.option("--eval", "eval_method", type=click.Choice(["combined", "linear", "euclidean"]),
              default="combined", show_default=True)
@click.option("--format", "fmt", type=FORMATS, default="json", show_default=True)
@click.option("--config", default=None, help="Flat key = value config file; flags take precedence.")
@click.pass_context
@_guard
def cmd_run(ctx, data, algo, budget, iterations, seed, lambdas, k, min_weight, uef,
            eval_method, fmt, config):
    """Run one solver and print the solution report."""
    _apply_config(ctx, config)
    p = ctx.params
    budget_obj = _make_budget(p["budget"], p["iterations"])
    universe = load_universe_file(p["data"])
    spec = ProblemSpec(universe=universe, k=p["k"], min_weight=p["min_weight"],
                       lambda_count=p["lambdas"])
    grid = lambda_grid(p["lambdas"])
    sol = solvers.run(p["algo"], spec, grid, budget_obj, RngStream(p["seed"]))

    report = {
        "dataset": p["data"],
        "algorithm": p["algo"],
        "seed": p["seed"],
        "k": p["k"],
        "min_weight": p["min_weight"],
        "lambda_count": p["lambdas"],
        "iterations": sol.iterations,
        "portfolios": [],
    }
    if p["iterations"] is not None:
        report["iteration_cap"] = p["iterations"]
    else:
        report["budget_seconds"] = p["budget"]
        report["elapsed_seconds"] = sol.elapsed_seconds
    for lam, portfolio, obj, (mean, var, std) in zip(
        sol.lambdas, sol.portfolios, sol.objectives, sol.stats
    ):
        report["portfolios"].append(
            {
                "lambda": float(lam),
                "objective": obj,
                "mean_return": mean,
                "variance": var,
                "std_dev": std,
                "holdings": [
                    [int(a), float(w)]
                    for a, w in sorted(zip(portfolio.assets, portfolio.weights))
                ],
            }
        )
    errors = None
    if p["uef"] is not None:
        frontier = load_uef_file(p["uef"])
        err = evaluation.evaluate_solution_set(sol, frontier, method=p["eval_method"])
        errors = list(err.errors)
        report["error_report"] = {
            "method": p["eval_method"],
            "errors": errors,
            "mpe": err.mpe,
        }

    if p["fmt"] == "json":
        click.echo(json.dumps(report, sort_keys=True))
        return
    header = ["lambda", "objective", "mean_return", "std_dev", "variance"]
    rows = [
        [e["lambda"], e["objective"], e["mean_return"], e["std_dev"], e["variance"]]
        for e in report["portfolios"]
    ]
    if errors is not None:
        header.append("error_pct")
        for row, e in zip(rows, errors):
            row.append(e)
    emit = _emit_csv if p["fmt"] == "csv" else _emit_table
    click.echo(emit(header, rows), nl=False)
    if errors is not None and p["fmt"] == "table":
        click.echo(f"MPE: {sum(errors) / len(errors):.4f}")


def _parse_repetitions(text: str, budgets: tuple[float, ...]):
    if ":" not in text:
        return int(text)
    reps = {}
    for part in text.split(","):
        b, r = part.split(":")
        reps[float(b)] = int(r)
    missing = [b for b in budgets if b not in reps]
    if missing:
        raise click.UsageError(f"--repetitions missing budgets: {missing}")
    return reps


@main.command("bench")
@click.option("--plan", "plan_file", default=None, help="Config file with plan keys.")
@click.option("--data-dir", default="data", show_default=True)
@click.option("--datasets", default="port1,port2,port3,port4,port5", show_default=True)
@click.option("--algos", default="sa,ts,ga", show_default=True)
@click.option("--budgets", default="1,5,25", show_default=True)
@click.option("--repetitions", default="1", show_default=True,
              help="Count, or per-budget `budget:count` pairs (e.g. 1:50,5:50,25:30).")
@click.option("--seed", type=int, default=0)
@click.option("--iterations", type=int, default=None)
@click.option("--lambdas", type=int, default=50, show_default=True)
@click.option("--eval", "eval_method", type=click.Choice(["combined", "linear", "euclidean"]),
              default="combined", show_default=True)
@click.option("--format", "fmt", type=FORMATS, default="json", show_default=True)
@click.pass_context
@_guard
def cmd_bench(ctx, plan_file, data_dir, datasets, algos, budgets, repetitions, seed,
              iterations, lambdas, eval_method, fmt):
    """Run an experiment grid and print MPE and improvement tables."""
    _apply_config(ctx, plan_file)
    p = ctx.params
    budget_list = tuple(float(b) for b in p["budgets"].split(","))
    workers = int(os.environ.get("FRONTIER_RACE_THREADS", "1"))
    if workers > 1 and p["iterations"] is None:
        click.echo(
            "warning: parallel wall-clock runs contend for CPU and can distort budgets",
            err=True,
        )
    plan = harness.ExperimentPlan(
        data_dir=p["data_dir"],
        datasets=tuple(p["datasets"].split(",")),
        algorithms=tuple(p["algos"].split(",")),
        budgets=budget_list,
        repetitions=_parse_repetitions(p["repetitions"], budget_list),
        base_seed=p["seed"],
        evaluation_method=p["eval_method"],
        lambda_count=p["lambdas"],
        iterations=p["iterations"],
        workers=workers,
    )
    report = harness.run_experiment(plan)
    payload = report.to_dict()
    if p["fmt"] == "json":
        click.echo(json.dumps(payload, sort_keys=True))
        return
    header = ["dataset", "algorithm", "budget_s", "repetitions", "mpe_mean", "mpe_std"]
    rows = [
        [c["dataset"], c["algorithm"], c["budget_s"], c["repetitions"],
         c["mpe_mean"], c["mpe_std"]]
        for c in payload["cells"]
    ]
    if p["fmt"] == "csv":
        click.echo(_emit_csv(header, rows), nl=False)
        return
    click.echo(_emit_table(header, rows), nl=False)
    click.echo()
    click.echo(_emit_table(
        ["algorithm", "budget_s", "mpe_mean"],
        [[r["algorithm"], r["budget_s"], r["mpe_mean"]] for r in payload["average_row"]],
    ), nl=False)
    if payload["improvements"]:
        click.echo()
        click.echo(_emit_table(
            ["dataset", "algorithm", "budgets", "improvement_pct"],
            [
                [r["dataset"], r["algorithm"],
                 f"{r['from_budget_s']:g}-{r['to_budget_s']:g} sec", r["improvement_pct"]]
                for r in payload["improvements"]
            ],
        ), nl=False)


@main.command("tune-tabu")
@click.option("--data", required=True)
@click.option("--uef", required=True)
@click.option("--budgets", default="1,5,25", show_default=True)
@click.option("--tenures", default="3", show_default=True)
@click.option("--seed", type=int, default=0)
@click.option("--iterations", type=int, default=None)
@click.option("--format", "fmt", type=FORMATS, default="json", show_default=True)
@_guard
def cmd_tune_tabu(data, uef, budgets, tenures, seed, iterations, fmt):
    """Score tabu search under all 16 list combinations and the given tenures."""
    budget_list = tuple(float(b) for b in budgets.split(","))
    tenure_list = tuple(int(t) for t in tenures.split(","))
    rows = harness.tabu_tuning_grid(
        data, uef, budgets=budget_list, tenures=tenure_list,
        base_seed=seed, iterations=iterations,
    )
    if fmt == "json":
        payload = [
            {**row, "mpe": {f"{b:g}": v for b, v in row["mpe"].items()}} for row in rows
        ]
        click.echo(json.dumps(payload, sort_keys=True))
        return
    header = ["assets_in", "assets_out", "weight_up", "weight_down", "tenure"]
    header += [f"mpe_{b:g}s" for b in budget_list] + ["mpe_average"]
    table_rows = []
    for row in rows:
        flags = [
            "yes" if kind in row["active_lists"] else "no"
            for kind in ("asset-in", "asset-out", "weight-up", "weight-down")
        ]
        table_rows.append(
            flags + [row["tenure"]] + [row["mpe"][b] for b in budget_list]
            + [row["mpe_average"]]
        )
    emit = _emit_csv if fmt == "csv" else _emit_table
    click.echo(emit(header, table_rows), nl=False)


@main.command("compare-sampling")
@click.option("--data", required=True)
@click.option("--n", "pool_size", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0)
@click.option("--k", type=int, default=10, show_default=True)
@click.option("--min-weight", type=float, default=0.01, show_default=True)
@click.option("--format", "fmt", type=FORMATS, default="json", show_default=True)
@_guard
def cmd_compare_sampling(data, pool_size, seed, k, min_weight, fmt):
    """Emit (std dev, mean return) scatter records for both weight-allocation schemes."""
    universe = load_universe_file(data)
    spec = ProblemSpec(universe=universe, k=k, min_weight=min_weight)
    records = sampling.sampling_comparison(spec, pool_size, RngStream(seed))
    if fmt == "json":
        payload = {
            scheme: [{"std_dev": s, "mean_return": r} for s, r in recs]
            for scheme, recs in records.items()
        }
        click.echo(json.dumps(payload, sort_keys=True))
        return
    header = ["scheme", "std_dev", "mean_return"]
    rows = [
        [scheme, s, r] for scheme in ("sequential", "independent")
        for s, r in records[scheme]
    ]
    emit = _emit_csv if fmt == "csv" else _emit_table
    click.echo(emit(header, rows), nl=False)


@main.command("frontier")
@click.option("--data", required=True)
@click.option("--uef", required=True)
@click.option("--algo", required=True, type=click.Choice(["sa", "ts", "ga"]))
@click.option("--budget", type=float, default=None)
@click.option("--iterations", type=int, default=None)
@click.option("--seed", type=int, default=0)
@click.option("--lambdas", type=int, default=50, show_default=True)
@click.option("--format", "fmt", type=FORMATS, default="json", show_default=True)
@_guard
def cmd_frontier(data, uef, algo, budget, iterations, seed, lambdas, fmt):
    """Solve once and emit the solution scatter plus the frontier polyline."""
    _make_budget(budget, iterations)  # validates the flag pair
    trace = harness.frontier_trace(
        data, uef, algo, budget, seed, lambda_count=lambdas, iterations=iterations
    )
    if fmt == "json":
        click.echo(json.dumps(trace, sort_keys=True))
        return
    header = ["stream", "lambda", "std_dev", "mean_return"]
    rows = [
        ["solution", rec["lambda"], rec["std_dev"], rec["mean_return"]]
        for rec in trace["solution"]
    ] + [["uef", "", rec["std_dev"], rec["mean_return"]] for rec in trace["uef"]]
    emit = _emit_csv if fmt == "csv" else _emit_table
    click.echo(emit(header, rows), nl=False)


if __name__ == "__main__":
    main()
