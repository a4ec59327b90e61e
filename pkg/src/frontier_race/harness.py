"""Experiment orchestration: repetitions, aggregation, tuning grids, and trace export."""

from __future__ import annotations

import hashlib
import itertools
import os
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from frontier_race import evaluation, solvers
from frontier_race.dataset import load_uef_file, load_universe_file
from frontier_race.model import ProblemSpec, lambda_grid, portfolio_stats
from frontier_race.neighborhood import ASSET_IN, ASSET_OUT, WEIGHT_DOWN, WEIGHT_UP
from frontier_race.sampling import RngStream

ALGORITHMS = ("sa", "ts", "ga")


@dataclass(frozen=True)
class ExperimentPlan:
    """Which (dataset, algorithm, budget) cells to run, and how many times each."""

    data_dir: str
    datasets: tuple[str, ...]
    algorithms: tuple[str, ...] = ALGORITHMS
    budgets: tuple[float, ...] = (1.0, 5.0, 25.0)
    repetitions: dict[float, int] | int = 1
    base_seed: int = 0
    evaluation_method: str = "combined"
    lambda_count: int = 50
    k: int = 10
    min_weight: float = 0.01
    iterations: int | None = None  # iteration-capped mode replaces the wall clock
    workers: int = 1

    def reps_for(self, budget: float) -> int:
        if isinstance(self.repetitions, dict):
            return self.repetitions[budget]
        return self.repetitions


def cell_seed(base_seed: int, dataset: str, algorithm: str, budget: float, rep: int) -> int:
    """Stable per-repetition seed: base_seed XOR a hash of the cell, plus the rep index."""
    digest = hashlib.sha256(f"{dataset}|{algorithm}|{budget}".encode()).digest()
    cell_hash = int.from_bytes(digest[:8], "big")
    return ((base_seed ^ cell_hash) + rep) & 0xFFFFFFFFFFFFFFFF


def host_metadata() -> dict:
    return {
        "platform": platform.platform(),
        "processor": platform.processor() or platform.machine(),
        "cpu_count": os.cpu_count(),
        "python": platform.python_version(),
    }


def _run_cell_rep(args) -> tuple[float, float]:
    """One solver repetition; returns (mpe, elapsed seconds). Top level so it pickles."""
    (port_path, uef_path, algorithm, budget_seconds, iterations, seed,
     lambda_count, k, min_weight, method) = args
    universe = load_universe_file(port_path)
    uef = load_uef_file(uef_path)
    spec = ProblemSpec(universe=universe, k=k, min_weight=min_weight,
                       lambda_count=lambda_count)
    if iterations is not None:
        budget = solvers.Budget.of_iterations(iterations)
    else:
        budget = solvers.Budget.of_seconds(budget_seconds)
    sol = solvers.run(algorithm, spec, lambda_grid(lambda_count), budget, RngStream(seed))
    report = evaluation.evaluate_solution_set(sol, uef, method=method)
    return report.mpe, sol.elapsed_seconds


@dataclass
class AggregateReport:
    """Per-cell MPE aggregates plus cross-dataset averages and improvement ratios."""

    cells: dict[tuple[str, str, float], dict]
    average_row: dict[tuple[str, float], float]
    improvements: dict[tuple[str, str, float, float], float]
    failures: dict[str, str]
    host: dict | None
    plan: ExperimentPlan

    def to_dict(self) -> dict:
        out = {
            "cells": [
                {"dataset": d, "algorithm": a, "budget_s": b, **cell}
                for (d, a, b), cell in sorted(self.cells.items())
            ],
            "average_row": [
                {"algorithm": a, "budget_s": b, "mpe_mean": v}
                for (a, b), v in sorted(self.average_row.items())
            ],
            "improvements": [
                {"dataset": d, "algorithm": a, "from_budget_s": b1, "to_budget_s": b2,
                 "improvement_pct": v}
                for (d, a, b1, b2), v in sorted(self.improvements.items())
            ],
            "failures": dict(sorted(self.failures.items())),
        }
        if self.host is not None:
            out["host"] = self.host
        return out


def run_experiment(plan: ExperimentPlan) -> AggregateReport:
    """Execute every plan cell, averaging repetition MPEs and deriving improvements."""
    usable = []
    failures: dict[str, str] = {}
    for dataset in plan.datasets:
        port_path = os.path.join(plan.data_dir, dataset)
        uef_path = os.path.join(plan.data_dir, dataset.replace("port", "portef"))
        try:
            load_universe_file(port_path)
            load_uef_file(uef_path)
        except Exception as exc:  # that dataset's cells abort, others continue
            failures[dataset] = str(exc)
            continue
        usable.append((dataset, port_path, uef_path))

    jobs = []
    for (dataset, port_path, uef_path), algorithm, budget in itertools.product(
        usable, plan.algorithms, plan.budgets
    ):
        for rep in range(plan.reps_for(budget)):
            seed = cell_seed(plan.base_seed, dataset, algorithm, budget, rep)
            jobs.append(
                (
                    (dataset, algorithm, budget),
                    (port_path, uef_path, algorithm, budget, plan.iterations, seed,
                     plan.lambda_count, plan.k, plan.min_weight, plan.evaluation_method),
                )
            )

    if plan.workers > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            results = list(pool.map(_run_cell_rep, [a for _, a in jobs]))
    else:
        results = [_run_cell_rep(a) for _, a in jobs]

    by_cell: dict[tuple[str, str, float], list[tuple[float, float]]] = {}
    for (key, _), res in zip(jobs, results):
        by_cell.setdefault(key, []).append(res)

    cells = {}
    for key, reps in by_cell.items():
        mpes = [m for m, _ in reps]
        cell = {
            "repetitions": len(reps),
            "mpe_mean": float(np.mean(mpes)),
            "mpe_std": float(np.std(mpes)),
            "mpes": mpes,
        }
        if plan.iterations is None:
            cell["wall_seconds"] = [t for _, t in reps]
        cells[key] = cell

    average_row = {}
    for algorithm, budget in itertools.product(plan.algorithms, plan.budgets):
        means = [
            cells[(d, algorithm, budget)]["mpe_mean"]
            for d, _, _ in usable
            if (d, algorithm, budget) in cells
        ]
        if means:
            average_row[(algorithm, budget)] = float(np.mean(means))

    improvements = {}
    ordered = sorted(plan.budgets)
    for (dataset, _, _), algorithm in itertools.product(usable, plan.algorithms):
        for b1, b2 in zip(ordered, ordered[1:]):
            k1, k2 = (dataset, algorithm, b1), (dataset, algorithm, b2)
            if k1 in cells and k2 in cells and cells[k1]["mpe_mean"] > 0:
                improvements[(dataset, algorithm, b1, b2)] = evaluation.improvement(
                    cells[k1]["mpe_mean"], cells[k2]["mpe_mean"]
                )

    return AggregateReport(
        cells=cells,
        average_row=average_row,
        improvements=improvements,
        failures=failures,
        host=host_metadata() if plan.iterations is None else None,
        plan=plan,
    )


ALL_TABU_LIST_COMBOS = tuple(
    tuple(
        kind
        for kind, on in zip((ASSET_IN, ASSET_OUT, WEIGHT_UP, WEIGHT_DOWN), flags)
        if on
    )
    for flags in itertools.product((False, True), repeat=4)
)


def tabu_tuning_grid(
    port_path: str,
    uef_path: str,
    budgets=(1.0, 5.0, 25.0),
    tenures=(3,),
    base_seed: int = 0,
    lambda_count: int = 50,
    k: int = 10,
    min_weight: float = 0.01,
    iterations: int | None = None,
    evaluation_method: str = "combined",
) -> list[dict]:
    """MPE of tabu search under every list combination and tenure, per budget."""
    universe = load_universe_file(port_path)
    uef = load_uef_file(uef_path)
    spec = ProblemSpec(universe=universe, k=k, min_weight=min_weight,
                       lambda_count=lambda_count)
    lambdas = lambda_grid(lambda_count)
    rows = []
    for combo, tenure in itertools.product(ALL_TABU_LIST_COMBOS, tenures):
        mpes = {}
        for budget_s in budgets:
            profile = solvers.profile_for_budget(
                "ts", budget_s, active_lists=combo, tenure=tenure
            )
            if iterations is not None:
                budget = solvers.Budget.of_iterations(iterations)
            else:
                budget = solvers.Budget.of_seconds(budget_s)
            seed = cell_seed(base_seed, "tune", f"ts:{','.join(combo)}:{tenure}", budget_s, 0)
            sol = solvers.run_ts(spec, lambdas, profile, budget, RngStream(seed))
            report = evaluation.evaluate_solution_set(sol, uef, method=evaluation_method)
            mpes[budget_s] = report.mpe
        rows.append(
            {
                "active_lists": list(combo),
                "tenure": tenure,
                "mpe": mpes,
                "mpe_average": float(np.mean(list(mpes.values()))),
            }
        )
    return rows


def frontier_trace(
    port_path: str,
    uef_path: str,
    algorithm: str,
    budget_seconds: float | None,
    seed: int,
    lambda_count: int = 50,
    k: int = 10,
    min_weight: float = 0.01,
    iterations: int | None = None,
) -> dict:
    """Solution portfolios and the frontier polyline as two labeled record streams."""
    universe = load_universe_file(port_path)
    uef = load_uef_file(uef_path)
    spec = ProblemSpec(universe=universe, k=k, min_weight=min_weight,
                       lambda_count=lambda_count)
    if iterations is not None:
        budget = solvers.Budget.of_iterations(iterations)
    else:
        budget = solvers.Budget.of_seconds(budget_seconds)
    sol = solvers.run(algorithm, spec, lambda_grid(lambda_count), budget, RngStream(seed))
    solution_records = []
    for lam, p in zip(sol.lambdas, sol.portfolios):
        mean, _var, std = portfolio_stats(p, spec)
        solution_records.append({"lambda": float(lam), "std_dev": std, "mean_return": mean})
    uef_records = [
        {"std_dev": float(s), "mean_return": float(r)}
        for r, s in zip(uef.returns, uef.std_devs)
    ]
    return {"solution": solution_records, "uef": uef_records}
