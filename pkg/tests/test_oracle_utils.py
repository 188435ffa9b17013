import dataclasses
import itertools

import pytest

from utils.formulation_utils import check_feasibility, derive_full_solution, objective_value
from utils.instance_utils import GenConfig, generate_instance
from utils.oracle_utils import OracleCapError, best_terminal_contribution, brute_force_opt


def naive_optimum(inst):
    """Enumerate every (power vector, cluster family) pair."""
    subsets = [set(s) for r in range(inst.num_bases + 1) for s in itertools.combinations(range(inst.num_bases), r)]
    best = 0.0
    for levels in itertools.product(range(inst.num_levels + 1), repeat=inst.num_bases):
        for clusters in itertools.product(subsets, repeat=inst.num_terminals):
            best = max(best, objective_value(inst, derive_full_solution(inst, levels, clusters)))
    return best


def test_oracle_on_tiny1(tiny1):
    result = brute_force_opt(tiny1)
    assert result.objective == pytest.approx(10.0)
    assert result.power_vectors == 9
    assert check_feasibility(tiny1, result.solution).ok
    assert result.solution.num_served == 1
    assert result.solution.max_cluster_size == 1


def test_oracle_all_off_when_nothing_can_be_served(tiny1):
    hopeless = dataclasses.replace(tiny1, delta=(1000.0,))
    result = brute_force_opt(hopeless)
    assert result.objective == 0.0
    assert result.solution.power_level == (0, 0)
    assert result.solution.num_served == 0


def test_oracle_pays_for_cooperation_only_when_profitable(tiny1):
    # single bases reach SIR 12 at most, the pair reaches 18
    joint_only = dataclasses.replace(tiny1, delta=(15.0,))
    assert brute_force_opt(joint_only).objective == pytest.approx(9.0)
    assert brute_force_opt(joint_only).solution.max_cluster_size == 2

    too_costly = dataclasses.replace(joint_only, coop_cost=(20.0,))
    assert brute_force_opt(too_costly).objective == 0.0


@pytest.mark.parametrize("seed", range(3))
def test_oracle_matches_naive_enumeration(small_factory, seed):
    inst = small_factory(seed=seed, num_terminals=2, num_bases=2, num_levels=2)
    assert brute_force_opt(inst).objective == pytest.approx(naive_optimum(inst))


@pytest.mark.parametrize("seed", range(4))
def test_oracle_is_self_consistent_per_terminal(small_factory, seed):
    inst = small_factory(seed=seed, num_terminals=5, num_bases=3, num_levels=2)
    result = brute_force_opt(inst)
    total = sum(best_terminal_contribution(inst, result.solution.power_level, t) for t in range(inst.num_terminals))
    assert total == pytest.approx(result.objective)
    assert objective_value(inst, result.solution) == result.objective
    assert check_feasibility(inst, result.solution).ok


def test_oracle_never_clusters_off_bases(small_instance):
    sol = brute_force_opt(small_instance).solution
    for cluster in sol.cluster:
        assert all(sol.power_level[b] > 0 for b in cluster)


def test_oracle_refuses_large_instances():
    inst = generate_instance(GenConfig(num_terminals=2, num_bases=16, num_levels=1))
    with pytest.raises(OracleCapError) as info:
        brute_force_opt(inst)
    assert "|B|=16" in str(info.value)
    with pytest.raises(OracleCapError):
        brute_force_opt(generate_instance(GenConfig(num_terminals=2, num_bases=9, num_levels=4)))
