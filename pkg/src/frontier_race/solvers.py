"""Wall-clock-budgeted simulated annealing, tabu search, and genetic algorithm."""

from __future__ import annotations

import contextlib
import gc
import heapq
import math
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from frontier_race.model import Portfolio, ProblemSpec, objective, portfolio_stats
from frontier_race.neighborhood import (
    ASSET_IN,
    ASSET_OUT,
    WEIGHT_DOWN,
    WEIGHT_UP,
    EmptyNeighborhoodError,
    Move,
    change_weights,
    crossover,
    mutate,
    replace_asset,
)
from frontier_race.sampling import (
    RngStream,
    generate_pool,
    pool_stats,
    select_starting_portfolios,
)

DEFAULT_POOL_SIZE = 1000
TUNED_BUDGETS = (1.0, 5.0, 25.0)


class Budget:
    """Stopping rule: a wall-clock deadline, an iteration cap, or both.

    Clock reads use a monotonic source. Once expired() reports True it stays
    True, even if the clock were to misbehave.
    """

    def __init__(self, seconds: float | None = None, max_iterations: int | None = None):
        if seconds is None and max_iterations is None:
            raise ValueError("budget needs a duration or an iteration cap")
        if seconds is not None and seconds <= 0:
            raise ValueError("budget duration must be positive")
        self.seconds = seconds
        self.max_iterations = max_iterations
        self._deadline: float | None = None
        self._started_at: float | None = None
        self._expired = False

    @classmethod
    def of_seconds(cls, seconds: float) -> "Budget":
        return cls(seconds=seconds)

    @classmethod
    def of_iterations(cls, n: int) -> "Budget":
        return cls(max_iterations=n)

    def start(self) -> None:
        if self._started_at is None:
            self._started_at = time.monotonic()
            if self.seconds is not None:
                self._deadline = self._started_at + self.seconds

    def elapsed(self) -> float:
        if self._started_at is None:
            return 0.0
        return time.monotonic() - self._started_at

    def expired(self, iterations: int = 0) -> bool:
        if self._expired:
            return True
        if self.max_iterations is not None and iterations >= self.max_iterations:
            self._expired = True
        elif self._deadline is not None:
            self.start()
            if time.monotonic() >= self._deadline:
                self._expired = True
        return self._expired


@dataclass(frozen=True)
class SaProfile:
    t_max: float = 0.00005
    alpha: float = 0.95

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")
        if self.t_max <= 0.0:
            raise ValueError("t_max must be positive")


@dataclass(frozen=True)
class TsProfile:
    subset_size: int = 50
    tenure: int = 3
    active_lists: tuple[str, ...] = (WEIGHT_DOWN,)
    aspiration: bool = False

    def __post_init__(self):
        if self.subset_size < 1:
            raise ValueError("subset_size must be >= 1")
        if self.tenure < 0:
            raise ValueError("tenure must be >= 0")
        valid = {ASSET_IN, ASSET_OUT, WEIGHT_UP, WEIGHT_DOWN}
        unknown = set(self.active_lists) - valid
        if unknown:
            raise ValueError(f"unknown tabu lists: {sorted(unknown)}")


@dataclass(frozen=True)
class GaProfile:
    population_size: int = 50
    pool_size: int = DEFAULT_POOL_SIZE
    p_replace: float = 0.1
    p_weights: float = 0.1

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.pool_size < self.population_size:
            raise ValueError("pool_size must be >= population_size")


SA_ALPHAS = {1.0: 0.7, 5.0: 0.95, 25.0: 0.995}
TS_SUBSETS = {1.0: 10, 5.0: 50, 25.0: 250}
GA_POPULATIONS = {1.0: 20, 5.0: 50, 25.0: 200}


def _nearest_tuned_budget(total_seconds: float) -> float:
    return min(TUNED_BUDGETS, key=lambda b: abs(math.log(total_seconds) - math.log(b)))


def profile_for_budget(algorithm: str, total_seconds: float, **overrides):
    """The tuned hyperparameter profile for a budget (log-scale nearest of 1/5/25 s)."""
    if total_seconds <= 0:
        raise ValueError("budget must be positive")
    key = _nearest_tuned_budget(total_seconds)
    algorithm = algorithm.lower()
    if algorithm == "sa":
        base = {"t_max": 0.00005, "alpha": SA_ALPHAS[key]}
        base.update(overrides)
        return SaProfile(**base)
    if algorithm == "ts":
        base = {"subset_size": TS_SUBSETS[key]}
        base.update(overrides)
        return TsProfile(**base)
    if algorithm == "ga":
        base = {"population_size": GA_POPULATIONS[key]}
        base.update(overrides)
        return GaProfile(**base)
    raise ValueError(f"unknown algorithm: {algorithm}")


@dataclass
class SolutionSet:
    """One best-so-far portfolio per lambda, with objective values and summary stats."""

    lambdas: np.ndarray
    portfolios: list[Portfolio]
    objectives: list[float]
    stats: list[tuple[float, float, float]] = field(default_factory=list)
    iterations: int = 0
    elapsed_seconds: float = 0.0

    def __post_init__(self):
        if len(self.portfolios) != len(self.lambdas):
            raise ValueError("one portfolio per lambda required")


@contextlib.contextmanager
def _gc_paused():
    """Pause cyclic garbage collection for the duration of a budgeted solve.

    The solver loops allocate heavily but create no reference cycles, so
    everything is reclaimed by reference counting; a generation-2 scan in the
    middle of a run can stall for tens of milliseconds and blow a deadline.
    """
    was_enabled = gc.isenabled()
    if was_enabled:
        gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()


def _deadline_safe(fn):
    """Run a solver entry point with cyclic GC paused."""

    def wrapper(*args, **kwargs):
        with _gc_paused():
            return fn(*args, **kwargs)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def sa_accept(delta: float, t: float, rng: RngStream) -> bool:
    """Always accept improvements; accept a degradation with probability exp(-delta/t)."""
    if delta <= 0.0:
        return True
    if t <= 0.0:
        return False
    return rng.generator.random() < math.exp(-delta / t)


def _finish(spec, lambdas, best, best_obj, iterations, budget) -> SolutionSet:
    return SolutionSet(
        lambdas=np.asarray(lambdas, dtype=float),
        portfolios=list(best),
        objectives=list(best_obj),
        stats=[portfolio_stats(p, spec) for p in best],
        iterations=iterations,
        elapsed_seconds=budget.elapsed(),
    )


@_deadline_safe
def run_sa(
    spec: ProblemSpec,
    lambdas,
    profile: SaProfile,
    budget: Budget,
    rng: RngStream,
    pool_size: int = DEFAULT_POOL_SIZE,
    callback=None,
    cooling: str = "per-sweep",
) -> SolutionSet:
    """Simulated annealing over all lambda chains round-robin, geometric cooling.

    With cooling="per-sweep" (default) the temperature drops and the move
    dimension flips once per full lambda sweep, keeping every chain at a
    common temperature; "per-step" does both after every single-lambda step.
    """
    if cooling not in ("per-sweep", "per-step"):
        raise ValueError("cooling must be 'per-sweep' or 'per-step'")
    budget.start()
    lambdas = np.asarray(lambdas, dtype=float)
    pool = generate_pool(spec, pool_size, rng, budget=budget)
    current = select_starting_portfolios(pool, spec, lambdas)
    cur_obj = [objective(p, spec, lam) for p, lam in zip(current, lambdas)]
    best = list(current)
    best_obj = list(cur_obj)

    t = profile.t_max
    use_replace = True
    iterations = 0
    while not budget.expired(iterations):
        for li, lam in enumerate(lambdas):
            if budget.expired(iterations):
                break
            move_fn = replace_asset if use_replace else change_weights
            try:
                candidate, _ = move_fn(current[li], spec, rng)
            except EmptyNeighborhoodError:
                candidate = None
            if candidate is not None:
                cand_obj = objective(candidate, spec, lam)
                if sa_accept(cand_obj - cur_obj[li], t, rng):
                    current[li] = candidate
                    cur_obj[li] = cand_obj
                    if cand_obj < best_obj[li]:
                        best[li] = candidate
                        best_obj[li] = cand_obj
            iterations += 1
            if cooling == "per-step":
                t *= profile.alpha
                use_replace = not use_replace
            if callback is not None:
                callback(li, iterations, best_obj[li], budget.elapsed())
        if cooling == "per-sweep":
            t *= profile.alpha
            use_replace = not use_replace
    return _finish(spec, lambdas, best, best_obj, iterations, budget)


class TabuMemory:
    """Per-lambda FIFO buffers of recent move attributes, one per attribute kind."""

    def __init__(self, tenure: int):
        self.tenure = tenure
        self.buffers: dict[str, deque] = {
            kind: deque(maxlen=tenure) if tenure > 0 else deque(maxlen=0)
            for kind in (ASSET_IN, ASSET_OUT, WEIGHT_UP, WEIGHT_DOWN)
        }

    def record(self, move: Move) -> None:
        for kind, asset in move.tags:
            self.buffers[kind].append(asset)


# Each active list forbids the move that would undo what it recorded.
_FORBIDS = {
    ASSET_IN: ASSET_OUT,    # recently added assets may not be removed
    ASSET_OUT: ASSET_IN,    # recently removed assets may not come back
    WEIGHT_DOWN: WEIGHT_UP,  # recently reduced assets may not grow
    WEIGHT_UP: WEIGHT_DOWN,  # recently grown assets may not shrink
}


def tabu_admissible(move: Move, lists: dict[str, "deque | list"]) -> bool:
    """True unless some active list forbids one of the move's attribute tags."""
    for list_kind, assets in lists.items():
        forbidden_tag = _FORBIDS[list_kind]
        for kind, asset in move.tags:
            if kind == forbidden_tag and asset in assets:
                return False
    return True


@_deadline_safe
def run_ts(
    spec: ProblemSpec,
    lambdas,
    profile: TsProfile,
    budget: Budget,
    rng: RngStream,
    pool_size: int = DEFAULT_POOL_SIZE,
    callback=None,
) -> SolutionSet:
    """Tabu search: best admissible candidate from a random neighbor subset per step."""
    budget.start()
    lambdas = np.asarray(lambdas, dtype=float)
    pool = generate_pool(spec, pool_size, rng, budget=budget)
    current = select_starting_portfolios(pool, spec, lambdas)
    cur_obj = [objective(p, spec, lam) for p, lam in zip(current, lambdas)]
    best = list(current)
    best_obj = list(cur_obj)
    memories = [TabuMemory(profile.tenure) for _ in lambdas]

    use_replace = True
    iterations = 0
    while not budget.expired(iterations):
        for li, lam in enumerate(lambdas):
            if budget.expired(iterations):
                break
            move_fn = replace_asset if use_replace else change_weights
            active = {
                kind: memories[li].buffers[kind] for kind in profile.active_lists
            }
            chosen = None
            for _attempt in range(2):
                for _ in range(profile.subset_size):
                    try:
                        candidate, move = move_fn(current[li], spec, rng)
                    except EmptyNeighborhoodError:
                        break
                    cand_obj = objective(candidate, spec, lam)
                    admissible = tabu_admissible(move, active) or (
                        profile.aspiration and cand_obj < best_obj[li]
                    )
                    if admissible and (chosen is None or cand_obj < chosen[2]):
                        chosen = (candidate, move, cand_obj)
                if chosen is not None:
                    break
            if chosen is not None:
                candidate, move, cand_obj = chosen
                current[li] = candidate
                cur_obj[li] = cand_obj
                memories[li].record(move)
                if cand_obj < best_obj[li]:
                    best[li] = candidate
                    best_obj[li] = cand_obj
            iterations += 1
            if callback is not None:
                callback(li, iterations, best_obj[li], budget.elapsed())
        use_replace = not use_replace
    return _finish(spec, lambdas, best, best_obj, iterations, budget)


@_deadline_safe
def run_ga(
    spec: ProblemSpec,
    lambdas,
    profile: GaProfile,
    budget: Budget,
    rng: RngStream,
    callback=None,
) -> SolutionSet:
    """Steady-state GA per lambda: binary tournament, uniform crossover, worst eviction.

    Each lambda keeps its own population, a max-heap keyed on the objective so
    the worst member pops in O(log n); the best-so-far is tracked separately.
    """
    budget.start()
    lambdas = np.asarray(lambdas, dtype=float)
    pool = generate_pool(spec, profile.pool_size, rng, budget=budget)
    means, variances = pool_stats(pool, spec)

    populations = []
    best = []
    best_obj = []
    for lam in lambdas:
        values = lam * variances - (1.0 - lam) * means
        top = np.argsort(values, kind="stable")[: profile.population_size]
        heap = [(-float(values[i]), int(i), pool[i]) for i in top]
        heapq.heapify(heap)
        best_idx = int(top[0])
        best.append(pool[best_idx])
        best_obj.append(float(values[best_idx]))
        populations.append(heap)

    if budget.expired():
        return _finish(spec, lambdas, best, best_obj, 0, budget)

    seq = len(pool)  # tie-breaker for heap entries
    iterations = 0
    while not budget.expired(iterations):
        for li, lam in enumerate(lambdas):
            if budget.expired(iterations):
                break
            heap = populations[li]
            picks = rng.generator.integers(len(heap), size=4)
            a, b, c, d = (heap[int(i)] for i in picks)
            parent1 = a[2] if -a[0] <= -b[0] else b[2]
            parent2 = c[2] if -c[0] <= -d[0] else d[2]
            child = crossover(parent1, parent2, spec, rng)
            child = mutate(child, spec, rng, profile.p_replace, profile.p_weights)
            child_obj = objective(child, spec, lam)
            heapq.heappushpop(heap, (-child_obj, seq, child))
            seq += 1
            if child_obj < best_obj[li]:
                best[li] = child
                best_obj[li] = child_obj
            iterations += 1
            if callback is not None:
                callback(li, iterations, best_obj[li], budget.elapsed())
    return _finish(spec, lambdas, best, best_obj, iterations, budget)


def run(
    algorithm: str,
    spec: ProblemSpec,
    lambdas,
    budget: Budget,
    rng: RngStream,
    profile=None,
    callback=None,
    **kwargs,
) -> SolutionSet:
    """Dispatch by algorithm name with the tuned default profile for the budget."""
    algorithm = algorithm.lower()
    if profile is None:
        seconds = budget.seconds if budget.seconds is not None else 1.0
        profile = profile_for_budget(algorithm, seconds)
    if algorithm == "sa":
        return run_sa(spec, lambdas, profile, budget, rng, callback=callback, **kwargs)
    if algorithm == "ts":
        return run_ts(spec, lambdas, profile, budget, rng, callback=callback, **kwargs)
    if algorithm == "ga":
        return run_ga(spec, lambdas, profile, budget, rng, callback=callback, **kwargs)
    raise ValueError(f"unknown algorithm: {algorithm}")
