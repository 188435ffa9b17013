import dataclasses

import numpy as np
import pytest

from utils.bounds_utils import (
    bm_bound,
    pi_bound,
    strengthened_model,
    strengthened_terminal_model,
    strong_bm_bound,
    terminal_bound,
    terminal_solution,
    tightness_fraction,
)
from utils.formulation_utils import derive_full_solution, x_key, y_key, z_key
from utils.oracle_utils import brute_force_opt
from utils.solver_utils import LpStatus, reuse_optimum


def test_pi_bound_on_tiny1(tiny1):
    result = pi_bound(tiny1)
    assert result.feasible
    assert result.value >= 10.0 - 1e-7
    assert result.cut_count >= 2


def test_pi_bound_point_satisfies_all_cuts(small_instance):
    result = pi_bound(small_instance)
    for cut in result.cuts:
        assert cut.violation(small_instance, result.point) <= 1e-6


def test_pi_bound_is_deterministic(small_instance):
    first, second = pi_bound(small_instance), pi_bound(small_instance)
    assert first.value == second.value
    assert first.cut_count == second.cut_count
    assert first.point == second.point


def test_pi_bound_history_never_increases(small_factory):
    inst = small_factory(seed=8, num_terminals=5, num_bases=3, num_levels=3)
    history = pi_bound(inst).history
    assert all(b <= a + 1e-7 for a, b in zip(history, history[1:]))


def test_pi_bound_without_cuts_is_the_skeleton_relaxation(tiny1):
    lone = dataclasses.replace(tiny1, bases=("b1",), atten=((0.5,),))
    result = pi_bound(lone)
    assert result.cut_count == 0
    # no SIR rows and no covers, but the service rows still ask for one cluster member
    assert result.value == pytest.approx(lone.revenue[0])


def test_pi_bound_stays_below_the_revenue_total(small_factory):
    inst = small_factory(seed=2, num_terminals=6, num_bases=3, num_levels=3)
    result = pi_bound(inst)
    assert result.value <= sum(inst.revenue) + 1e-6
    assert result.value < sum(r + c for r, c in zip(inst.revenue, inst.coop_cost))
    for t in range(inst.num_terminals):
        members = sum(result.point[y_key(t, b)] for b in range(inst.num_bases))
        assert result.point[x_key(t)] <= members + 1e-6


def test_bm_bound_on_tiny1(tiny1):
    assert bm_bound(tiny1).value >= 10.0 - 1e-7


def test_strong_bm_bound_of_fixed_optimum(tiny1):
    optimum = derive_full_solution(tiny1, [2, 0], [{0}])
    result = strong_bm_bound(tiny1, optimum.to_point(tiny1))
    assert result.value == pytest.approx(10.0)


def test_strong_bm_bound_with_two_levels_is_infeasible(tiny1):
    result = strong_bm_bound(tiny1, {z_key(0, 1): 1, z_key(0, 2): 1})
    assert result.status == LpStatus.INFEASIBLE
    assert result.value == -np.inf
    assert not result.feasible


def test_strong_bm_bound_is_monotone_in_fixings(small_instance):
    chain = [{}, {z_key(0, 2): 1}, {z_key(0, 2): 1, y_key(0, 0): 1}, {z_key(0, 2): 1, y_key(0, 0): 1, z_key(1, 1): 1}]
    values = [strong_bm_bound(small_instance, fixings).value for fixings in chain]
    assert all(b <= a + 1e-7 for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("seed", range(5))
def test_bounds_are_valid_against_the_oracle(small_factory, seed):
    inst = small_factory(seed=seed, num_terminals=4, num_bases=3, num_levels=2)
    optimum = brute_force_opt(inst).objective
    assert pi_bound(inst).value >= optimum - 1e-6
    assert bm_bound(inst).value >= optimum - 1e-6


def test_terminal_bounds_add_up_once_powers_are_fixed(small_instance):
    inst = small_instance
    fixings = {z_key(b, l): int(l == 1) for b in range(inst.num_bases) for l in range(1, inst.num_levels + 1)}
    total = sum(terminal_bound(inst, t, fixings) for t in range(inst.num_terminals))
    assert total == pytest.approx(strong_bm_bound(inst, fixings).value, abs=1e-6)


def test_reused_terminal_optima_match_fresh_solves(small_instance):
    inst = small_instance
    for t in range(inst.num_terminals):
        model = strengthened_terminal_model(inst, t)
        parent = terminal_solution(inst, t, {})
        for b in range(inst.num_bases):
            for level in range(inst.num_levels + 1):
                extra = {z_key(b, l): int(l == level) for l in range(1, inst.num_levels + 1)}
                reused = reuse_optimum(model, parent, extra)
                if reused is not None:
                    assert reused.objective == pytest.approx(terminal_bound(inst, t, extra), abs=1e-6)


def test_strengthened_model_is_shared(tiny1):
    assert strengthened_model(tiny1) is strengthened_model(dataclasses.replace(tiny1))
    assert strengthened_model(tiny1).num_rows == 15 + 3 + 2


def test_tightness_fraction():
    assert tightness_fraction([(1.0, 2.0), (2.0, 2.0), (3.0, 2.0), (1.0, 1.0)]) == 0.75
    assert np.isnan(tightness_fraction([]))
