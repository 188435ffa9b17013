import pytest

from utils.bounds_utils import pi_bound, strengthened_model
from utils.config_utils import ParamsError
from utils.formulation_utils import check_feasibility, derive_full_solution, objective_value, z_key
from utils.oracle_utils import brute_force_opt
from utils.rins_utils import RinsConfig, mod_rins, rins_fixings


def test_classic_rins_fixes_only_integral_agreement(tiny1):
    model = strengthened_model(tiny1)
    ant_point = derive_full_solution(tiny1, [2, 0], [{0}]).to_point(tiny1)
    pi_point = {key: 0.5 for key in model.var_keys}
    pi_point[z_key(0, 2)] = 1.0
    pi_point[z_key(1, 1)] = 0.0
    pi_point[z_key(0, 1)] = 0.0
    fixings = rins_fixings(model, ant_point, pi_point, epsilon=0.0)
    assert fixings == {z_key(0, 2): 1, z_key(1, 1): 0, z_key(0, 1): 0}


def test_no_fixings_when_relaxation_sits_at_one_half(tiny1):
    model = strengthened_model(tiny1)
    ant_point = derive_full_solution(tiny1, [2, 0], [{0}]).to_point(tiny1)
    pi_point = {key: 0.5 for key in model.var_keys}
    assert rins_fixings(model, ant_point, pi_point, epsilon=0.49) == {}


def test_fixed_set_grows_with_epsilon(small_instance):
    model = strengthened_model(small_instance)
    pi = pi_bound(small_instance)
    ant_point = derive_full_solution(small_instance, [1] * small_instance.num_bases,
                                     [{0}] * small_instance.num_terminals).to_point(small_instance)
    narrow = rins_fixings(model, ant_point, pi.point, epsilon=0.05)
    wide = rins_fixings(model, ant_point, pi.point, epsilon=0.3)
    assert narrow.items() <= wide.items()


def test_optimal_ant_is_returned_unchanged(tiny1):
    ant = derive_full_solution(tiny1, [2, 0], [{0}])
    refined = mod_rins(tiny1, ant, pi_bound(tiny1).point, RinsConfig(time_limit=10))
    assert refined is ant


def test_rins_improves_a_poor_ant(tiny1):
    ant = derive_full_solution(tiny1, [0, 0], [set()])
    model = strengthened_model(tiny1)
    refined = mod_rins(tiny1, ant, {key: 0.5 for key in model.var_keys}, RinsConfig(time_limit=10))
    assert objective_value(tiny1, refined) == pytest.approx(10.0)
    assert check_feasibility(tiny1, refined).ok


@pytest.mark.parametrize("seed", range(3))
def test_rins_never_lowers_the_objective(small_factory, seed):
    inst = small_factory(seed=seed, num_terminals=4, num_bases=3, num_levels=2)
    pi = pi_bound(inst)
    optimum = brute_force_opt(inst).objective
    for levels in ([1, 0, 0], [2, 2, 2], [0, 1, 2]):
        ant = derive_full_solution(inst, levels, [{b for b in range(3) if levels[b]}] * inst.num_terminals)
        refined = mod_rins(inst, ant, pi.point, RinsConfig(epsilon=0.01, time_limit=10))
        assert objective_value(inst, refined) >= objective_value(inst, ant)
        assert objective_value(inst, refined) <= optimum + 1e-6
        assert check_feasibility(inst, refined).ok


def test_rins_config_invariants(tiny1):
    with pytest.raises(ParamsError):
        RinsConfig(epsilon=0.5).validate()
    with pytest.raises(ParamsError):
        RinsConfig(time_limit=0).validate()
    with pytest.raises(ParamsError):
        mod_rins(tiny1, derive_full_solution(tiny1, [0, 0], [set()]), None, RinsConfig())
