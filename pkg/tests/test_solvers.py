import math
import time

import numpy as np
import pytest

from frontier_race.model import check_feasible, lambda_grid, objective
from frontier_race.neighborhood import (
    ASSET_IN,
    ASSET_OUT,
    WEIGHT_DOWN,
    WEIGHT_UP,
    Move,
)
from frontier_race.sampling import RngStream
from frontier_race.solvers import (
    Budget,
    GaProfile,
    SaProfile,
    TabuMemory,
    TsProfile,
    profile_for_budget,
    run,
    run_ga,
    run_sa,
    run_ts,
    sa_accept,
    tabu_admissible,
)


class TestBudget:
    def test_requires_some_limit(self):
        with pytest.raises(ValueError):
            Budget()
        with pytest.raises(ValueError):
            Budget(seconds=0.0)

    def test_iteration_cap(self):
        b = Budget.of_iterations(10)
        assert not b.expired(9)
        assert b.expired(10)
        # the latch never releases
        assert b.expired(0)

    def test_wall_clock(self):
        b = Budget.of_seconds(0.05)
        b.start()
        assert not b.expired()
        time.sleep(0.06)
        assert b.expired()
        assert b.elapsed() >= 0.05

    def test_elapsed_before_start(self):
        assert Budget.of_seconds(1.0).elapsed() == 0.0

    def test_dual_limits(self):
        b = Budget(seconds=100.0, max_iterations=5)
        b.start()
        assert not b.expired(4)
        assert b.expired(5)


class TestProfiles:
    def test_sa_validation(self):
        with pytest.raises(ValueError):
            SaProfile(alpha=1.0)
        with pytest.raises(ValueError):
            SaProfile(t_max=0.0)

    def test_ts_validation(self):
        with pytest.raises(ValueError):
            TsProfile(subset_size=0)
        with pytest.raises(ValueError):
            TsProfile(active_lists=("bogus",))

    def test_ga_validation(self):
        with pytest.raises(ValueError):
            GaProfile(population_size=1)
        with pytest.raises(ValueError):
            GaProfile(population_size=50, pool_size=10)

    def test_tuned_values(self):
        assert profile_for_budget("sa", 1.0).alpha == 0.7
        assert profile_for_budget("sa", 5.0).alpha == 0.95
        assert profile_for_budget("sa", 25.0).alpha == 0.995
        assert profile_for_budget("sa", 25.0).t_max == 0.00005
        assert profile_for_budget("ts", 1.0).subset_size == 10
        assert profile_for_budget("ts", 5.0).subset_size == 50
        assert profile_for_budget("ts", 25.0).subset_size == 250
        assert profile_for_budget("ts", 5.0).tenure == 3
        assert profile_for_budget("ts", 5.0).active_lists == (WEIGHT_DOWN,)
        assert profile_for_budget("ga", 1.0).population_size == 20
        assert profile_for_budget("ga", 5.0).population_size == 50
        assert profile_for_budget("ga", 25.0).population_size == 200

    def test_nearest_budget_on_log_scale(self):
        # sqrt(1*5) ~ 2.24 and sqrt(5*25) ~ 11.18 are the crossover points
        assert profile_for_budget("ts", 2.0).subset_size == 10
        assert profile_for_budget("ts", 3.0).subset_size == 50
        assert profile_for_budget("ts", 11.0).subset_size == 50
        assert profile_for_budget("ts", 12.0).subset_size == 250
        assert profile_for_budget("ts", 100.0).subset_size == 250
        with pytest.raises(ValueError):
            profile_for_budget("ts", 0.0)

    def test_overrides_and_unknown_algorithm(self):
        assert profile_for_budget("sa", 5.0, alpha=0.5).alpha == 0.5
        with pytest.raises(ValueError):
            profile_for_budget("nope", 5.0)


class TestSaAccept:
    def test_improvements_always_accepted(self):
        rng = RngStream(0)
        assert sa_accept(-1.0, 1e-5, rng)
        assert sa_accept(0.0, 1e-5, rng)

    def test_zero_temperature_rejects_degradations(self):
        assert not sa_accept(1e-9, 0.0, RngStream(0))

    def test_acceptance_rate_matches_exp(self):
        # delta = t means acceptance probability exp(-1)
        rng = RngStream(12345)
        n = 200_000
        accepted = sum(sa_accept(1e-5, 1e-5, rng) for _ in range(n))
        p = math.exp(-1.0)
        se = math.sqrt(p * (1 - p) / n)
        assert abs(accepted / n - p) < 4 * se


class TestTabu:
    def test_memory_fifo_eviction(self):
        mem = TabuMemory(tenure=2)
        for asset in (1, 2, 3):
            mem.record(Move(kind="transfer", tags=((WEIGHT_DOWN, asset),)))
        assert list(mem.buffers[WEIGHT_DOWN]) == [2, 3]

    def test_zero_tenure_remembers_nothing(self):
        mem = TabuMemory(tenure=0)
        mem.record(Move(kind="transfer", tags=((WEIGHT_DOWN, 1),)))
        assert list(mem.buffers[WEIGHT_DOWN]) == []

    def test_admissibility_rules(self):
        # weight-down list forbids increasing the recorded asset
        lists = {WEIGHT_DOWN: [5]}
        up5 = Move(kind="transfer", tags=((WEIGHT_DOWN, 3), (WEIGHT_UP, 5)))
        assert not tabu_admissible(up5, lists)
        down5 = Move(kind="transfer", tags=((WEIGHT_DOWN, 5), (WEIGHT_UP, 3)))
        assert tabu_admissible(down5, lists)

        # asset-in list forbids removing the recorded asset
        lists = {ASSET_IN: [7]}
        remove7 = Move(kind="replace", tags=((ASSET_OUT, 7), (ASSET_IN, 2)))
        assert not tabu_admissible(remove7, lists)
        add7_back = Move(kind="replace", tags=((ASSET_OUT, 2), (ASSET_IN, 7)))
        assert tabu_admissible(add7_back, lists)

        # asset-out list forbids re-adding the recorded asset
        lists = {ASSET_OUT: [4]}
        assert not tabu_admissible(
            Move(kind="replace", tags=((ASSET_OUT, 9), (ASSET_IN, 4))), lists
        )

        # weight-up list forbids decreasing the recorded asset
        lists = {WEIGHT_UP: [6]}
        assert not tabu_admissible(
            Move(kind="transfer", tags=((WEIGHT_DOWN, 6), (WEIGHT_UP, 1))), lists
        )

    def test_no_active_lists_admits_everything(self):
        move = Move(kind="replace", tags=((ASSET_OUT, 1), (ASSET_IN, 2)))
        assert tabu_admissible(move, {})


RUNNERS = {
    "sa": lambda spec, lambdas, budget, rng, **kw: run_sa(
        spec, lambdas, SaProfile(), budget, rng, pool_size=200, **kw
    ),
    "ts": lambda spec, lambdas, budget, rng, **kw: run_ts(
        spec, lambdas, TsProfile(subset_size=5), budget, rng, pool_size=200, **kw
    ),
    "ga": lambda spec, lambdas, budget, rng, **kw: run_ga(
        spec, lambdas, GaProfile(population_size=20, pool_size=200), budget, rng, **kw
    ),
}


@pytest.mark.parametrize("name", list(RUNNERS))
def test_solver_output_shape_and_feasibility(name, spec_port1):
    lambdas = lambda_grid(8)
    sol = RUNNERS[name](spec_port1, lambdas, Budget.of_iterations(400), RngStream(1))
    assert len(sol.portfolios) == len(lambdas) == len(sol.objectives) == len(sol.stats)
    assert sol.iterations == 400
    for p, lam, obj in zip(sol.portfolios, sol.lambdas, sol.objectives):
        assert check_feasible(p, spec_port1).feasible
        assert objective(p, spec_port1, lam) == pytest.approx(obj, rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("name", list(RUNNERS))
def test_solver_improves_on_starting_point(name, spec_port1):
    lambdas = lambda_grid(8)
    start = RUNNERS[name](spec_port1, lambdas, Budget.of_iterations(1), RngStream(7))
    long = RUNNERS[name](spec_port1, lambdas, Budget.of_iterations(4000), RngStream(7))
    assert sum(long.objectives) < sum(start.objectives)
    assert all(b <= s + 1e-15 for b, s in zip(long.objectives, start.objectives))


@pytest.mark.parametrize("name", list(RUNNERS))
def test_solver_deterministic_under_iteration_cap(name, spec_port1):
    lambdas = lambda_grid(5)
    a = RUNNERS[name](spec_port1, lambdas, Budget.of_iterations(500), RngStream(42))
    b = RUNNERS[name](spec_port1, lambdas, Budget.of_iterations(500), RngStream(42))
    assert a.objectives == b.objectives
    for p, q in zip(a.portfolios, b.portfolios):
        assert np.array_equal(p.assets, q.assets)
        assert np.array_equal(p.weights, q.weights)


@pytest.mark.parametrize("name", list(RUNNERS))
def test_solver_best_so_far_monotone(name, spec_port1):
    lambdas = lambda_grid(5)
    seen: dict[int, float] = {}
    def watch(li, iterations, best_obj, elapsed):
        if li in seen:
            assert best_obj <= seen[li] + 1e-15
        seen[li] = best_obj
    RUNNERS[name](spec_port1, lambdas, Budget.of_iterations(1000), RngStream(3), callback=watch)
    assert len(seen) == len(lambdas)


@pytest.mark.parametrize("name", list(RUNNERS))
def test_solver_respects_wall_clock(name, spec_port1):
    lambdas = lambda_grid(50)
    budget = Budget.of_seconds(0.2)
    t0 = time.monotonic()
    RUNNERS[name](spec_port1, lambdas, budget, RngStream(5))
    assert time.monotonic() - t0 < 0.2 + 0.05


def test_run_dispatcher(spec_port1):
    lambdas = lambda_grid(4)
    sol = run("sa", spec_port1, lambdas, Budget.of_iterations(100), RngStream(0))
    assert sol.iterations == 100
    with pytest.raises(ValueError):
        run("bogus", spec_port1, lambdas, Budget.of_iterations(10), RngStream(0))


def test_sa_per_step_cooling_differs(spec_port1):
    lambdas = lambda_grid(5)
    a = run_sa(spec_port1, lambdas, SaProfile(), Budget.of_iterations(500),
               RngStream(9), pool_size=100, cooling="per-sweep")
    b = run_sa(spec_port1, lambdas, SaProfile(), Budget.of_iterations(500),
               RngStream(9), pool_size=100, cooling="per-step")
    # Same seed, different cooling schedule: the chains diverge.
    assert a.objectives != b.objectives
    with pytest.raises(ValueError):
        run_sa(spec_port1, lambdas, SaProfile(), Budget.of_iterations(10),
               RngStream(0), cooling="hourly")


def test_ts_all_lists_active_still_progresses(spec_port1):
    lambdas = lambda_grid(4)
    profile = TsProfile(subset_size=5,
                        active_lists=(ASSET_IN, ASSET_OUT, WEIGHT_UP, WEIGHT_DOWN))
    sol = run_ts(spec_port1, lambdas, profile, Budget.of_iterations(400),
                 RngStream(11), pool_size=100)
    assert sol.iterations == 400
    for p in sol.portfolios:
        assert check_feasible(p, spec_port1).feasible


def test_ga_population_members_stay_feasible(spec_port1):
    lambdas = lambda_grid(3)
    sol = run_ga(spec_port1, lambdas, GaProfile(population_size=10, pool_size=50),
                 Budget.of_iterations(300), RngStream(13))
    for p in sol.portfolios:
        assert check_feasible(p, spec_port1).feasible
