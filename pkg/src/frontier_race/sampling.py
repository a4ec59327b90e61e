"""Random portfolio generation and hybrid starting-solution selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from frontier_race.model import InfeasibleSpecError, Portfolio, ProblemSpec, portfolio_stats


@dataclass
class RngStream:
    """A seeded PCG64 stream; the same seed replays the same draws on any platform."""

    seed: int

    def __post_init__(self):
        self.generator = np.random.Generator(np.random.PCG64(self.seed))

    def spawn(self, offset: int) -> "RngStream":
        return RngStream(seed=(self.seed + offset) & 0xFFFFFFFFFFFFFFFF)


def _draw_assets(spec: ProblemSpec, rng: RngStream) -> np.ndarray:
    return rng.generator.choice(spec.universe.n, size=spec.k, replace=False).astype(np.intp)


def random_portfolio_sequential(spec: ProblemSpec, rng: RngStream) -> Portfolio:
    """Assign weights one at a time; each draw leaves room for the minimum on the rest.

    The j-th of K weights is uniform on [l, remaining - (K-j)*l]; the final
    asset takes the exact remainder, so the weights sum to 1 with no drift.
    """
    k, l = spec.k, spec.min_weight
    assets = _draw_assets(spec, rng)
    weights = np.empty(k)
    remaining = 1.0
    for j in range(k - 1):
        high = remaining - (k - 1 - j) * l
        w = rng.generator.uniform(l, high)
        weights[j] = w
        remaining -= w
    weights[k - 1] = remaining
    return Portfolio(assets=assets, weights=weights)


def random_portfolio_independent(spec: ProblemSpec, rng: RngStream) -> Portfolio:
    """Draw K numbers at once, scale them to the free mass 1 - K*l, then add l to each."""
    k, l = spec.k, spec.min_weight
    assets = _draw_assets(spec, rng)
    free = 1.0 - k * l
    while True:
        u = rng.generator.random(k)
        total = u.sum()
        if total > 0.0:
            break
    weights = l + u * (free / total)
    # Pin the sum to exactly 1 by folding the rounding residual into the last weight.
    weights[-1] += 1.0 - weights.sum()
    return Portfolio(assets=assets, weights=weights)


def generate_pool(spec: ProblemSpec, pool_size: int, rng: RngStream, budget=None) -> list[Portfolio]:
    """A pool of sequential-scheme random portfolios, stopping early if the budget runs out."""
    pool = []
    for _ in range(pool_size):
        pool.append(random_portfolio_sequential(spec, rng))
        if budget is not None and budget.expired():
            break
    return pool


def pool_stats(pool: list[Portfolio], spec: ProblemSpec) -> tuple[np.ndarray, np.ndarray]:
    """(mean returns, variances) of every pool member, for vectorized objective scans."""
    if not pool:
        return np.empty(0), np.empty(0)
    k = len(pool[0].assets)
    if all(len(p.assets) == k for p in pool):
        assets = np.stack([p.assets for p in pool])
        weights = np.stack([p.weights for p in pool])
        means = np.einsum("ni,ni->n", weights, spec.universe.mean_returns[assets])
        sub = spec.universe.covariance[assets[:, :, None], assets[:, None, :]]
        variances = np.maximum(np.einsum("ni,nij,nj->n", weights, sub, weights), 0.0)
        return means, variances
    means = np.empty(len(pool))
    variances = np.empty(len(pool))
    for i, p in enumerate(pool):
        means[i], variances[i], _ = portfolio_stats(p, spec)
    return means, variances


def select_starting_portfolios(
    pool: list[Portfolio], spec: ProblemSpec, lambdas: np.ndarray
) -> list[Portfolio]:
    """For each lambda, the pool member with the smallest objective value."""
    means, variances = pool_stats(pool, spec)
    starts = []
    for lam in lambdas:
        values = lam * variances - (1.0 - lam) * means
        starts.append(pool[int(np.argmin(values))])
    return starts


def find_starting_portfolios(
    spec: ProblemSpec,
    lambdas: np.ndarray,
    pool_size: int,
    rng: RngStream,
    budget=None,
) -> list[Portfolio]:
    """Generate one shared random pool and pick the best member per lambda."""
    if pool_size < 1:
        raise InfeasibleSpecError("pool_size must be >= 1")
    pool = generate_pool(spec, pool_size, rng, budget=budget)
    return select_starting_portfolios(pool, spec, lambdas)


def sampling_comparison(
    spec: ProblemSpec, pool_size: int, rng: RngStream
) -> dict[str, list[tuple[float, float]]]:
    """(std dev, mean return) scatter records for both weight-allocation schemes."""
    records: dict[str, list[tuple[float, float]]] = {"sequential": [], "independent": []}
    for name, gen in (
        ("sequential", random_portfolio_sequential),
        ("independent", random_portfolio_independent),
    ):
        for _ in range(pool_size):
            p = gen(spec, rng)
            mean, _, std = portfolio_stats(p, spec)
            records[name].append((std, mean))
    return records
