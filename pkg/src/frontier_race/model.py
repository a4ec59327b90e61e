"""Portfolio representation, constraints, objective evaluation, and the lambda grid."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from frontier_race.dataset import AssetUniverse

WEIGHT_SUM_TOL = 1e-9
MIN_WEIGHT_SLACK = 1e-12
VARIANCE_FLOOR = -1e-12


class InfeasibleSpecError(ValueError):
    """Raised when the problem parameters admit no feasible portfolio."""


@dataclass(frozen=True)
class Portfolio:
    """Exactly K held assets with their capital weights.

    `assets` and `weights` are parallel arrays; treat instances as immutable
    snapshots (moves always build new ones).
    """

    assets: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_holdings(cls, holdings: dict[int, float]) -> "Portfolio":
        items = sorted(holdings.items())
        return cls(
            assets=np.array([i for i, _ in items], dtype=np.intp),
            weights=np.array([w for _, w in items], dtype=float),
        )

    @property
    def holdings(self) -> dict[int, float]:
        return dict(zip(self.assets.tolist(), self.weights.tolist()))

    @property
    def k(self) -> int:
        return len(self.assets)


@dataclass(frozen=True)
class ProblemSpec:
    """A dataset together with the constraint parameters and lambda grid size."""

    universe: AssetUniverse
    k: int = 10
    min_weight: float = 0.01
    lambda_count: int = 50

    def __post_init__(self):
        if not (1 <= self.k <= self.universe.n):
            raise InfeasibleSpecError(
                f"k must be in [1, {self.universe.n}], got {self.k}"
            )
        if self.k * self.min_weight > 1.0:
            raise InfeasibleSpecError(
                f"k * min_weight = {self.k * self.min_weight} exceeds 1"
            )
        if self.lambda_count < 2:
            raise InfeasibleSpecError("lambda_count must be >= 2")


@dataclass(frozen=True)
class FeasibilityVerdict:
    feasible: bool
    violations: tuple[str, ...] = ()


def check_feasible(p: Portfolio, spec: ProblemSpec) -> FeasibilityVerdict:
    """Check the cardinality, weight-sum, minimum-weight, and index-range constraints."""
    violations = []
    if len(p.assets) != spec.k:
        violations.append("cardinality")
    if len(np.unique(p.assets)) != len(p.assets) or np.any(p.assets < 0) or np.any(
        p.assets >= spec.universe.n
    ):
        violations.append("index-range")
    if abs(float(np.sum(p.weights)) - 1.0) > WEIGHT_SUM_TOL:
        violations.append("sum-to-one")
    if np.any(p.weights < spec.min_weight - MIN_WEIGHT_SLACK):
        violations.append("min-weight")
    return FeasibilityVerdict(feasible=not violations, violations=tuple(violations))


def portfolio_stats(p: Portfolio, spec: ProblemSpec) -> tuple[float, float, float]:
    """Return (mean return, variance, std dev) of a portfolio.

    Variance is computed over the K held assets only, not the full universe.
    """
    ix = p.assets
    w = p.weights
    mean = float(w @ spec.universe.mean_returns[ix])
    variance = float(w @ spec.universe.covariance[np.ix_(ix, ix)] @ w)
    if variance < VARIANCE_FLOOR:
        raise ArithmeticError(f"portfolio variance {variance} below numeric floor")
    variance = max(variance, 0.0)
    return mean, variance, variance**0.5


def objective(p: Portfolio, spec: ProblemSpec, lam: float) -> float:
    """The risk/return trade-off objective: lam * variance - (1 - lam) * mean return."""
    ix = p.assets
    w = p.weights
    variance = float(w @ spec.universe.covariance[np.ix_(ix, ix)] @ w)
    mean = float(w @ spec.universe.mean_returns[ix])
    return lam * variance - (1.0 - lam) * mean


def lambda_grid(count: int) -> np.ndarray:
    """`count` evenly spaced trade-off weights covering [0, 1] inclusive."""
    if count < 2:
        raise ValueError(f"lambda grid needs at least 2 values, got {count}")
    return np.linspace(0.0, 1.0, count)
