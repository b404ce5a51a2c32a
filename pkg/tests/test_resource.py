import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import grid_resource_oracle
from ramec.errors import InfeasibleProblem, InvalidArgument
from ramec.resource import (
    SolverSettings,
    TaskParams,
    allocation_objective,
    local_rate_energy,
    make_allocation,
    max_user_bits,
    offload_rate,
    solve_resource_allocation,
    validate_allocation,
    zero_allocation,
)

CORPUS = json.loads((Path(__file__).parent / "data" / "resource_corpus.json").read_text())


def corpus_params(inst):
    return TaskParams(
        bandwidth=inst["bandwidth"], overhead=inst["overhead"], cycles_per_bit=inst["cycles"],
        frame=inst["frame"], e_max=inst["e_max"], circuit_power=inst["circuit_power"],
        capacitance=inst["capacitance"], r_min=inst["r_min"], weight=inst.get("weights", 1.0),
    )


def test_local_rate_energy_examples():
    p = TaskParams()
    assert local_rate_energy(0.0, p) == (0.0, 0.0)
    bits, _ = local_rate_energy(1e6, p)
    assert bits == pytest.approx(1000.0)
    _, energy = local_rate_energy(1e9, p)
    assert energy == pytest.approx(0.1)


def test_offload_rate_examples():
    assert offload_rate(1.0, 0.0, 1e6, 1e7, 1.0) == 0.0
    assert offload_rate(0.25, 0.25, 1.0, 1e7, 1.0) == pytest.approx(2.5e6)
    assert offload_rate(0.0, 0.3, 1e6, 1e7, 1.1) == 0.0


def test_no_offloading_gain_goes_local():
    p = TaskParams()
    alloc, rep = solve_resource_allocation([0.0], p)
    fstar = (p.e_max / (p.frame * p.capacitance)) ** (1 / 3)
    assert alloc.slot[0] == 0 and alloc.offload_energy[0] == 0 and alloc.transmit_power[0] == 0
    assert alloc.cpu_freq[0] == pytest.approx(fstar, rel=1e-7)
    assert allocation_objective(alloc, p) == pytest.approx(p.frame / p.cycles_per_bit * fstar, rel=1e-7)


def test_zero_budget_gives_zero_allocation():
    p = TaskParams(e_max=0.0)
    alloc, _ = solve_resource_allocation([1e6, 1e5], p)
    assert allocation_objective(alloc, p) == 0.0
    assert np.all(alloc.slot == 0) and np.all(alloc.cpu_freq == 0)


def test_reference_pair_matches_oracle():
    p = TaskParams(overhead=1.1)
    alloc, rep = solve_resource_allocation([1e6, 1e4], p)
    oracle = grid_resource_oracle([1e6, 1e4], frame=1.0, bandwidth=1e7, overhead=1.1, cycles=1000,
                                  e_max=10, capacitance=1e-28, circuit_power=0.1)
    obj = allocation_objective(alloc, p)
    assert abs(obj - oracle) <= 0.02 * oracle
    assert obj >= oracle * (1 - 1e-6)


@pytest.mark.parametrize("inst", CORPUS, ids=[c["label"] for c in CORPUS])
def test_corpus_against_frozen_oracle(inst):
    p = corpus_params(inst)
    alloc, rep = solve_resource_allocation(inst["gains"], p)
    obj = allocation_objective(alloc, p)
    oracle = inst["oracle_bits"]
    assert abs(obj - oracle) <= 0.02 * oracle
    # the grid optimum is a feasible point, so the solver may only lose solver tolerance to it
    assert obj >= oracle * (1 - 1e-6)
    assert rep.kkt_residual <= 1e-6
    assert validate_allocation(alloc, inst["gains"], p).max_residual <= 1e-6


def test_validate_zero_allocation():
    p = TaskParams()
    rep = validate_allocation(zero_allocation([1.0, 2.0], p), [1.0, 2.0], p)
    assert rep.max_residual == 0.0 and rep.objective == 0.0


def test_validate_reports_time_overrun():
    p = TaskParams()
    a = make_allocation([0.1, 0.1], [0.5, 0.51], [0.0, 0.0], [1e3, 1e3], p)
    rep = validate_allocation(a, [1e3, 1e3], p)
    assert rep.time == pytest.approx(0.01)


def test_validate_flags_energy_without_airtime():
    p = TaskParams()
    a = make_allocation([0.5], [0.0], [0.0], [1e3], p)
    assert validate_allocation(a, [1e3], p).idle_energy == 0.5


def test_validate_flags_unmet_minimum_bits():
    p = TaskParams(r_min=1e6)
    a = make_allocation([0.0], [0.0], [1e8], [1e3], p)
    assert validate_allocation(a, [1e3], p).min_bits == pytest.approx(1e6 - 1e5)


@pytest.mark.parametrize("seed", range(6))
def test_solution_feasible_and_certified(seed):
    rng = np.random.default_rng(seed)
    gains = 10 ** rng.uniform(3, 9, 4)
    p = TaskParams()
    alloc, rep = solve_resource_allocation(gains, p)
    assert validate_allocation(alloc, gains, p).max_residual <= 1e-6
    assert rep.kkt_residual <= 1e-6
    assert rep.converged


def _objective_at(x, gains, p):
    n = len(gains)
    return allocation_objective(make_allocation(x[n: 2 * n], x[:n], x[2 * n:], gains, p), p)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 0.99))
def test_objective_concave(seed, lam):
    rng = np.random.default_rng(seed)
    gains = 10 ** rng.uniform(0, 8, 3)
    p = TaskParams()
    a = np.concatenate([rng.uniform(1e-4, 0.3, 3), rng.uniform(0, 5, 3), rng.uniform(0, 3e9, 3)])
    b = np.concatenate([rng.uniform(1e-4, 0.3, 3), rng.uniform(0, 5, 3), rng.uniform(0, 3e9, 3)])
    mid = _objective_at(lam * a + (1 - lam) * b, gains, p)
    chord = lam * _objective_at(a, gains, p) + (1 - lam) * _objective_at(b, gains, p)
    assert mid >= chord - 1e-9 * max(1.0, abs(chord))


@pytest.mark.parametrize("seed", range(4))
def test_optimum_monotone_in_gain(seed):
    rng = np.random.default_rng(100 + seed)
    gains = 10 ** rng.uniform(3, 8, 3)
    p = TaskParams()
    prev = -np.inf
    for scale in (0.1, 0.5, 1.0, 2.0, 10.0):
        g = gains.copy()
        g[seed % 3] *= scale
        obj = allocation_objective(solve_resource_allocation(g, p)[0], p)
        assert obj >= prev * (1 - 1e-7)
        prev = obj


@pytest.mark.parametrize("seed", range(4))
def test_energy_budget_saturated(seed):
    rng = np.random.default_rng(seed)
    gains = 10 ** rng.uniform(2, 9, 3)
    p = TaskParams(e_max=[1.0, 5.0, 12.0])
    alloc, _ = solve_resource_allocation(gains, p)
    spent = alloc.e_loc + alloc.e_off
    np.testing.assert_allclose(spent, [1.0, 5.0, 12.0], rtol=1e-6)


def test_doubling_bandwidth_at_least_doubles_offload():
    # a huge capacitance switches local computing off
    base = dict(capacitance=1e10, circuit_power=0.1)
    a1, _ = solve_resource_allocation([1e6], TaskParams(bandwidth=1e7, **base))
    a2, _ = solve_resource_allocation([1e6], TaskParams(bandwidth=2e7, **base))
    assert a2.r_off[0] >= 2 * a1.r_off[0] * (1 - 1e-7)


def test_minimum_bits_respected():
    gains = np.array([1e8, 1e3])
    need = 3e7
    p = TaskParams(r_min=[0.0, need])
    alloc, rep = solve_resource_allocation(gains, p)
    assert alloc.r_loc[1] + alloc.r_off[1] >= need * (1 - 1e-6)
    assert validate_allocation(alloc, gains, p).max_residual <= 1e-6
    # the floor costs the strong user something
    free, _ = solve_resource_allocation(gains, TaskParams())
    assert allocation_objective(alloc, p) <= allocation_objective(free, TaskParams())


def test_unreachable_minimum_bits_names_user():
    with pytest.raises(InfeasibleProblem) as exc:
        solve_resource_allocation([1e6, 1e6], TaskParams(r_min=[0.0, 1e12]))
    assert exc.value.user == 1


def test_jointly_unreachable_minimum_bits():
    gains = [1e6, 1e6]
    solo = max_user_bits(1e6, TaskParams())
    with pytest.raises(InfeasibleProblem):
        solve_resource_allocation(gains, TaskParams(r_min=0.9 * solo))


def test_no_budget_but_floor_is_infeasible():
    with pytest.raises(InfeasibleProblem):
        solve_resource_allocation([1e6], TaskParams(e_max=0.0, r_min=1.0))


def test_max_user_bits_bounds_joint_share():
    gains = np.array([1e7, 1e5])
    p = TaskParams()
    alloc, _ = solve_resource_allocation(gains, p)
    for m in range(2):
        assert alloc.r_loc[m] + alloc.r_off[m] <= max_user_bits(gains[m], p, m) * (1 + 1e-7)


def test_rejects_negative_gain():
    with pytest.raises(InvalidArgument):
        solve_resource_allocation([-1.0], TaskParams())


@pytest.mark.parametrize(
    "kwargs",
    [dict(overhead=1.0), dict(bandwidth=0.0), dict(weight=0.0), dict(r_min=-1.0), dict(frame=0.0)],
)
def test_task_params_validation(kwargs):
    with pytest.raises(InvalidArgument):
        TaskParams(**kwargs)


def test_solver_settings_validation():
    with pytest.raises(InvalidArgument):
        SolverSettings(kkt_tol=0.0)
    with pytest.raises(InvalidArgument):
        SolverSettings(barrier_mu=1.0)
