"""Neighborhood moves (asset replacement, pairwise weight transfer) and GA variation operators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from frontier_race.model import Portfolio, ProblemSpec
from frontier_race.sampling import RngStream

ASSET_IN = "asset-in"
ASSET_OUT = "asset-out"
WEIGHT_UP = "weight-up"
WEIGHT_DOWN = "weight-down"


class EmptyNeighborhoodError(RuntimeError):
    """No move exists in the requested neighborhood dimension."""


@dataclass(frozen=True)
class Move:
    """An executed move together with its per-asset attribute tags.

    kind is "replace" or "transfer"; tags pair an attribute name with the
    affected asset index, which is all the tabu lists ever record.
    """

    kind: str
    tags: tuple[tuple[str, int], ...]


def replace_asset(p: Portfolio, spec: ProblemSpec, rng: RngStream) -> tuple[Portfolio, Move]:
    """Swap one held asset for a random outside asset, keeping its exact weight."""
    n, k = spec.universe.n, p.k
    if k >= n:
        raise EmptyNeighborhoodError("every asset is already held")
    held = set(p.assets.tolist())
    pos = int(rng.generator.integers(k))
    while True:
        incoming = int(rng.generator.integers(n))
        if incoming not in held:
            break
    outgoing = int(p.assets[pos])
    assets = p.assets.copy()
    assets[pos] = incoming
    move = Move(kind="replace", tags=((ASSET_OUT, outgoing), (ASSET_IN, incoming)))
    return Portfolio(assets=assets, weights=p.weights.copy()), move


def change_weights(p: Portfolio, spec: ProblemSpec, rng: RngStream) -> tuple[Portfolio, Move]:
    """Redistribute weight between two held assets, conserving their combined mass."""
    k, l = p.k, spec.min_weight
    if k < 2:
        raise EmptyNeighborhoodError("need at least two held assets")
    max_tries = k * (k - 1) // 2
    for _ in range(max_tries):
        i, j = rng.generator.choice(k, size=2, replace=False)
        combined = p.weights[i] + p.weights[j]
        if combined > 2 * l:
            break
    else:
        raise EmptyNeighborhoodError("every asset pair is pinned at the minimum weight")
    new_i = rng.generator.uniform(l, combined - l)
    new_j = combined - new_i
    weights = p.weights.copy()
    weights[i] = new_i
    weights[j] = new_j
    if new_i < p.weights[i]:
        donor, receiver = int(p.assets[i]), int(p.assets[j])
    else:
        donor, receiver = int(p.assets[j]), int(p.assets[i])
    move = Move(kind="transfer", tags=((WEIGHT_DOWN, donor), (WEIGHT_UP, receiver)))
    return Portfolio(assets=p.assets.copy(), weights=weights), move


def scale_weights(raw: dict[int, float], spec: ProblemSpec) -> dict[int, float]:
    """Rescale the fraction of each weight above the minimum so the total is 1.

    w' = l + (w - l) * c with c chosen so the weights sum to 1; the last entry
    absorbs the (sub-1e-15) rounding residual. If no weight exceeds the minimum
    while the total must grow, falls back to equal weights.
    """
    l = spec.min_weight
    m = len(raw)
    indices = sorted(raw)
    w = np.array([raw[i] for i in indices])
    excess = w - l
    total_excess = float(excess.sum())
    target_excess = 1.0 - m * l
    if total_excess <= 0.0:
        if abs(target_excess) < 1e-12:
            return {i: l for i in indices}
        w = np.full(m, 1.0 / m)
    else:
        w = l + excess * (target_excess / total_excess)
    w[-1] += 1.0 - w.sum()
    return dict(zip(indices, w.tolist()))


def crossover(p1: Portfolio, p2: Portfolio, spec: ProblemSpec, rng: RngStream) -> Portfolio:
    """Uniform crossover: shared assets always inherit, exclusive assets with 50% chance.

    The raw child is repaired to exactly K assets (dropping the lightest,
    or inserting random outside assets at the minimum weight) and rescaled.
    """
    h1, h2 = p1.holdings, p2.holdings
    raw: dict[int, float] = {}
    for asset in sorted(set(h1) | set(h2)):
        in1, in2 = asset in h1, asset in h2
        if in1 and in2:
            raw[asset] = h1[asset] if rng.generator.random() < 0.5 else h2[asset]
        elif rng.generator.random() < 0.5:
            raw[asset] = h1[asset] if in1 else h2[asset]

    k, l = spec.k, spec.min_weight
    if len(raw) > k:
        for asset in sorted(raw, key=lambda a: (raw[a], a))[: len(raw) - k]:
            del raw[asset]
    while len(raw) < k:
        asset = int(rng.generator.integers(spec.universe.n))
        if asset not in raw:
            raw[asset] = l
    return Portfolio.from_holdings(scale_weights(raw, spec))


def mutate(
    p: Portfolio,
    spec: ProblemSpec,
    rng: RngStream,
    p_replace: float = 0.1,
    p_weights: float = 0.1,
) -> Portfolio:
    """Independently apply each move kind with its own probability."""
    if rng.generator.random() < p_replace:
        try:
            p, _ = replace_asset(p, spec, rng)
        except EmptyNeighborhoodError:
            pass
    if rng.generator.random() < p_weights:
        try:
            p, _ = change_weights(p, spec, rng)
        except EmptyNeighborhoodError:
            pass
    return p
