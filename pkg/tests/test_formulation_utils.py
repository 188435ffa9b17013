import itertools

import numpy as np
import pytest

from utils.formulation_utils import (
    CandidateSolution,
    add_service_rows,
    big_m_value,
    build_bigM_model,
    check_feasibility,
    derive_full_solution,
    is_served,
    load_solution,
    objective_value,
    save_solution,
    sir_value,
    v_key,
    x_key,
    z_key,
)
from utils.instance_utils import InstanceFormatError


def test_sir_value_single_server(tiny1):
    assert sir_value(tiny1, [2.0, 0.0], {0}, 0) == pytest.approx(12.0)


def test_sir_value_empty_cluster_and_all_off(tiny1):
    assert sir_value(tiny1, [2.0, 2.0], set(), 0) == 0.0
    assert sir_value(tiny1, [0.0, 0.0], {0, 1}, 0) == 0.0


def test_is_served_examples(tiny1):
    assert is_served(tiny1, [2.0, 0.0], {0}, 0)
    assert sir_value(tiny1, [2.0, 2.0], {0}, 0) == pytest.approx(1.2 / 0.7)
    assert is_served(tiny1, [2.0, 2.0], {0}, 0)
    assert not is_served(tiny1, [2.0, 2.0], set(), 0)


def test_is_served_accepts_exact_threshold(tiny1):
    # 0.6 * p = 1.5 * (0.1 + 0.3 * 1) -> p = 1.0 exactly at the boundary
    assert is_served(tiny1, [1.0, 1.0], {0}, 0)


def test_big_m_value(tiny1):
    assert big_m_value(tiny1, 0) == pytest.approx(2.85)


def test_big_m_is_affine_in_p_max(tiny1):
    import dataclasses

    doubled = dataclasses.replace(tiny1, levels=(2.0, 4.0))
    delta_n = tiny1.delta[0] * tiny1.noise
    assert big_m_value(doubled, 0) == pytest.approx(2 * big_m_value(tiny1, 0) - delta_n)
    silent = dataclasses.replace(tiny1, atten=((0.0, 0.0),))
    assert big_m_value(silent, 0) == pytest.approx(delta_n)


def test_bigM_model_sizes(tiny1):
    model = build_bigM_model(tiny1)
    assert model.num_vars == 11
    assert model.num_rows == 15


def test_bigM_model_sizes_follow_formula(small_instance):
    inst = small_instance
    model = build_bigM_model(inst)
    T, B, L = inst.num_terminals, inst.num_bases, inst.num_levels
    assert model.num_vars == T + B * L + T * B + T * B * L
    assert model.num_rows == T + B + 3 * T * B * L


def test_sir_row_coefficients(tiny1):
    model = build_bigM_model(tiny1)
    row = next(r for r in model.rows if r.name == "sir_t1")
    assert row.sense == ">="
    assert row.coefs[model.index(v_key(0, 0, 2))] == pytest.approx(2.5 * 0.6 * 2.0)
    assert row.coefs[model.index(z_key(1, 1))] == pytest.approx(-1.5 * 0.3 * 1.0)
    assert row.coefs[model.index(x_key(0))] == pytest.approx(-2.85)
    assert row.rhs == pytest.approx(0.15 - 2.85)


def test_objective_coefficients(tiny1):
    c = build_bigM_model(tiny1).objective_vector()
    # x carries r + c, each y carries -c
    assert sorted(c[c != 0].tolist()) == [-1.0, -1.0, 11.0]


def test_derive_full_solution_examples(tiny1):
    single = derive_full_solution(tiny1, [2, 0], [{0}])
    assert single.served == (True,)
    assert objective_value(tiny1, single) == pytest.approx(10.0)

    both = derive_full_solution(tiny1, [2, 2], [{0, 1}])
    assert both.served == (True,)
    assert objective_value(tiny1, both) == pytest.approx(9.0)

    off = derive_full_solution(tiny1, [0, 0], [set()])
    assert off.served == (False,)
    assert objective_value(tiny1, off) == 0.0


def test_single_server_pays_no_cooperation_cost(tiny1):
    sol = derive_full_solution(tiny1, [2, 0], [{0}])
    assert objective_value(tiny1, sol) == tiny1.revenue[0]


def test_linearization_values(tiny1):
    sol = derive_full_solution(tiny1, [2, 1], [{0}])
    assert sol.v(0, 0, 2) == 1
    assert sol.v(0, 0, 1) == 0
    assert sol.v(0, 1, 1) == 0


def test_checker_flags_false_service_claim(tiny1):
    fake = CandidateSolution(power_level=(0, 2), cluster=(frozenset(),), served=(True,))
    report = check_feasibility(tiny1, fake)
    assert not report.ok
    assert len(report.violations) == 1
    assert "t1" in report.violations[0]


def test_checker_flags_structural_errors(tiny1):
    broken = CandidateSolution(power_level=(3, 0), cluster=(frozenset({5}),), served=(False,))
    report = check_feasibility(tiny1, broken)
    assert len(report.violations) == 2


def test_every_derived_solution_satisfies_the_model(small_factory):
    inst = small_factory(seed=5, num_terminals=2, num_bases=2, num_levels=2)
    model = build_bigM_model(inst)
    level_choices = itertools.product(range(inst.num_levels + 1), repeat=inst.num_bases)
    subsets = [set(s) for r in range(inst.num_bases + 1) for s in itertools.combinations(range(inst.num_bases), r)]
    for levels in level_choices:
        for clusters in itertools.product(subsets, repeat=inst.num_terminals):
            sol = derive_full_solution(inst, levels, clusters)
            assert check_feasibility(inst, sol).ok
            point = model.vector_from_keys(sol.to_point(inst))
            assert model.violated_rows(point) == []
            assert model.objective_of(point) == pytest.approx(objective_value(inst, sol))


def test_service_rows_hold_for_every_derived_solution(small_factory):
    inst = small_factory(seed=5, num_terminals=2, num_bases=2, num_levels=2)
    model = build_bigM_model(inst)
    assert add_service_rows(model, inst) == inst.num_terminals * (inst.num_bases + 1)
    subsets = [set(s) for r in range(inst.num_bases + 1) for s in itertools.combinations(range(inst.num_bases), r)]
    for levels in itertools.product(range(inst.num_levels + 1), repeat=inst.num_bases):
        for clusters in itertools.product(subsets, repeat=inst.num_terminals):
            sol = derive_full_solution(inst, levels, clusters)
            assert model.violated_rows(model.vector_from_keys(sol.to_point(inst))) == []


def test_service_rows_on_tiny1(tiny1):
    model = build_bigM_model(tiny1)
    add_service_rows(model, tiny1)
    assert model.num_rows == 15 + 1 + 2
    row = next(r for r in model.rows if r.name == "srv_t1")
    assert row.coefs[model.index(x_key(0))] == 1.0
    assert row.coefs[model.index(v_key(0, 1, 2))] == -1.0
    assert row.sense == "<=" and row.rhs == 0.0


def test_enlarging_a_cluster_never_lowers_sir(small_instance):
    inst = small_instance
    powers = inst.powers([1] * inst.num_bases)
    for t in range(inst.num_terminals):
        assert sir_value(inst, powers, {0, 1}, t) >= sir_value(inst, powers, {0}, t)


def test_solution_file_round_trip(tiny1):
    sol = derive_full_solution(tiny1, [2, 0], [{0}])
    text = save_solution(tiny1, sol)
    assert text.splitlines()[:3] == ["P b1 2", "P b2 0", "C t1 b1"]
    assert load_solution(tiny1, text) == sol


def test_unserved_cluster_survives_the_round_trip(tiny1):
    sol = derive_full_solution(tiny1, [0, 0], [{0}])
    assert sol.served == (False,)
    assert objective_value(tiny1, sol) == pytest.approx(-1.0)
    loaded = load_solution(tiny1, save_solution(tiny1, sol))
    assert loaded == sol
    assert objective_value(tiny1, loaded) == pytest.approx(-1.0)


def test_solution_with_a_wrong_objective_is_rejected(tiny1):
    text = "P b1 2\nP b2 0\nC t1 b1\nOBJ 9.0\n"
    with pytest.raises(InstanceFormatError) as info:
        load_solution(tiny1, text)
    assert info.value.line == 4
    assert info.value.field == "OBJ"


def test_lp_dump_lists_every_variable(tiny1):
    text = build_bigM_model(tiny1).to_lp_text()
    assert text.startswith("\\ bigM_TINY1\nMaximize")
    assert "sir_t1:" in text
    assert text.count("<= 1\n") >= 11
    assert text.rstrip().endswith("End")
