"""Frontier-deviation error metrics, MPE aggregation, and dominance filtering."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from frontier_race.dataset import Uef

METHODS = ("linear", "combined", "euclidean")


class FrontierRangeError(ValueError):
    """The point lies outside the frontier's range on both axes."""


@dataclass(frozen=True)
class FrontierPoint:
    std_dev: float
    mean_return: float


@dataclass(frozen=True)
class ErrorReport:
    errors: tuple[float, ...]
    mpe: float
    method: str


def _x_error(point: FrontierPoint, uef: Uef) -> float | None:
    """Percentage deviation along the risk axis, against the interpolated frontier."""
    r = point.mean_return
    if not (uef.returns[0] <= r <= uef.returns[-1]):
        return None
    s_ref = float(np.interp(r, uef.returns, uef.std_devs))
    return 100.0 * abs(point.std_dev - s_ref) / s_ref


def _y_error(point: FrontierPoint, uef: Uef) -> float | None:
    """Percentage deviation along the return axis, against the interpolated frontier."""
    s = point.std_dev
    if not (uef.std_devs[0] <= s <= uef.std_devs[-1]):
        return None
    r_ref = float(np.interp(s, uef.std_devs, uef.returns))
    return 100.0 * abs(point.mean_return - r_ref) / r_ref


def percentage_error_linear(point: FrontierPoint, uef: Uef) -> float:
    """Smaller of the per-axis interpolated deviations; fails outside the range."""
    candidates = [e for e in (_x_error(point, uef), _y_error(point, uef)) if e is not None]
    if not candidates:
        raise FrontierRangeError(
            f"point (std={point.std_dev}, return={point.mean_return}) outside frontier range"
        )
    return min(candidates)


def _edge_error(point: FrontierPoint, uef: Uef, edge: int) -> float:
    """Shortest of the y-axis deviation and the Euclidean distance to an edge vertex.

    The percentage is taken relative to the edge vertex's standard deviation,
    matching the axis-deviation convention of dividing by the reference value.
    """
    s_edge = float(uef.std_devs[edge])
    r_edge = float(uef.returns[edge])
    euclid = 100.0 * math.hypot(point.std_dev - s_edge, point.mean_return - r_edge) / s_edge
    y_err = _y_error(point, uef)
    if y_err is None:
        return euclid
    return min(y_err, euclid)


def percentage_error_combined(point: FrontierPoint, uef: Uef) -> float:
    """Interpolated deviation inside the return range; edge-vertex fallback outside.

    Below the lowest frontier return the error is the shortest of the y-axis
    deviation and the Euclidean distance to the lowest-return vertex; above
    the highest return the rule mirrors onto the highest-return vertex.
    """
    r = point.mean_return
    if r < uef.returns[0]:
        return _edge_error(point, uef, 0)
    if r > uef.returns[-1]:
        return _edge_error(point, uef, -1)
    return percentage_error_linear(point, uef)


def percentage_error_euclidean(point: FrontierPoint, uef: Uef) -> float:
    """Relative Euclidean distance to the nearest frontier vertex, as a percentage."""
    ds = uef.std_devs - point.std_dev
    dr = uef.returns - point.mean_return
    dist = np.hypot(ds, dr)
    norm = np.hypot(uef.std_devs, uef.returns)
    return float(100.0 * np.min(dist / norm))


_ERROR_FUNCS = {
    "linear": percentage_error_linear,
    "combined": percentage_error_combined,
    "euclidean": percentage_error_euclidean,
}


def percentage_error(point: FrontierPoint, uef: Uef, method: str = "combined") -> float:
    try:
        fn = _ERROR_FUNCS[method]
    except KeyError:
        raise ValueError(f"unknown evaluation method: {method!r}") from None
    return fn(point, uef)


def mpe(errors) -> float:
    """Arithmetic mean of per-portfolio percentage errors."""
    errors = list(errors)
    if not errors:
        raise ValueError("cannot average an empty error list")
    return float(sum(errors) / len(errors))


def filter_dominated(points: list[FrontierPoint]) -> list[FrontierPoint]:
    """Drop every point that another point beats on both risk and return."""
    survivors = []
    for p in points:
        dominated = False
        for q in points:
            if (
                q.mean_return >= p.mean_return
                and q.std_dev <= p.std_dev
                and (q.mean_return > p.mean_return or q.std_dev < p.std_dev)
            ):
                dominated = True
                break
        if not dominated:
            survivors.append(p)
    return survivors


def improvement(earlier_mpe: float, later_mpe: float) -> float:
    """Relative change between two MPEs, as a percentage of the earlier one."""
    if earlier_mpe <= 0:
        raise ValueError("earlier MPE must be positive")
    return 100.0 * (earlier_mpe - later_mpe) / earlier_mpe


def evaluate_points(
    points: list[FrontierPoint],
    uef: Uef,
    method: str = "combined",
    dominated_filter: bool = False,
) -> ErrorReport:
    """Score a solution set's (std dev, mean return) points against the frontier."""
    if dominated_filter:
        points = filter_dominated(points)
    errors = tuple(percentage_error(p, uef, method) for p in points)
    return ErrorReport(errors=errors, mpe=mpe(errors), method=method)


def evaluate_solution_set(solution_set, uef: Uef, method: str = "combined",
                          dominated_filter: bool = False) -> ErrorReport:
    points = [
        FrontierPoint(std_dev=std, mean_return=mean)
        for mean, _var, std in solution_set.stats
    ]
    return evaluate_points(points, uef, method, dominated_filter)
