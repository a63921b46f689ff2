from __future__ import annotations

import numpy as np
import pytest

from satqn import benders
from satqn.baselines import prepare
from satqn.harness.generator import generate_scenario, random_small_scenario, toy_scenario
from satqn.model import NULL, first_path_assignment, residuals

from _oracles import c2_assignments
from conftest import line_scenario


def test_single_edge_subproblem_value_and_tight_cut():
    inst = prepare(line_scenario((800.0,)))
    dec = benders.Decomposition(inst)
    x = dec.binary_part(first_path_assignment(inst))
    sub = benders.solve_subproblem(dec, x)
    assert sub.value == pytest.approx(800.0)
    cut = benders.make_optimality_cut(dec, sub.duals)
    assert cut.bound_at(x) == pytest.approx(800.0, abs=1e-7)


def test_null_selection_gives_zero():
    s = line_scenario(slots=1)
    from dataclasses import replace
    s = replace(s, links=(replace(s.links[0], active=(False,), capacity=(0.0,)),))
    inst = prepare(s)
    assert inst.index.tags[inst.binary_cols[0]].pid == NULL
    dec = benders.Decomposition(inst)
    sub = benders.solve_subproblem(dec, np.ones(1))
    assert sub.value == 0.0 and not np.any(sub.vector[~inst.integer])
    cut = benders.make_optimality_cut(dec, sub.duals)
    assert np.all(cut.coef == 0.0)


def test_cut_without_c1_duals_is_constant():
    inst = prepare(line_scenario())
    dec = benders.Decomposition(inst)
    duals = np.zeros(inst.n_rows)
    cut = benders.make_optimality_cut(dec, duals)
    assert np.all(cut.coef == 0.0) and cut.rhs == 0.0
    with pytest.raises(ValueError):
        benders.make_optimality_cut(dec, np.zeros(inst.n_rows + 1))


def test_master_without_cuts_hits_cap():
    inst = prepare(toy_scenario())
    dec = benders.Decomposition(inst)
    x, bound = benders.solve_master(dec, benders.MasterState())
    assert bound == pytest.approx(dec.theta_cap)
    assert residuals(inst, np.r_[x, np.zeros(inst.n_cols - x.size)]).max_by_family["C2"] <= 1e-9


def _enumerable_seeds(n=12, max_binaries=10):
    out, seed = [], 0
    while len(out) < n:
        if prepare(random_small_scenario(seed)).binary_cols.size <= max_binaries:
            out.append(seed)
        seed += 1
    return out


@pytest.mark.parametrize("seed", _enumerable_seeds())
def test_cuts_valid_at_every_c2_assignment(seed):
    inst = prepare(random_small_scenario(seed))
    sol = benders.run(inst, gap_tol=1e-9)
    dec = benders.Decomposition(inst)
    for x in c2_assignments(inst):
        xb = dec.binary_part(x)
        v = benders.solve_subproblem(dec, xb).value
        for cut in sol.extra["cuts"]:
            assert cut.bound_at(xb) >= v - 1e-6 * max(1.0, abs(v))


def test_bounds_monotone_and_sandwich_on_default_scenario():
    inst = prepare(generate_scenario(seed=2))
    sol = benders.run(inst, gap_tol=1e-6)
    st = sol.extra["state"]
    assert all(b >= a - 1e-9 for a, b in zip(st.incumbent_history, st.incumbent_history[1:]))
    assert all(b <= a + 1e-9 for a, b in zip(st.bound_history, st.bound_history[1:]))
    assert sol.converged and sol.report.clean
    assert sol.bound >= sol.objective - 1e-9


def test_single_assignment_converges_fast():
    inst = prepare(line_scenario(slots=2))
    sol = benders.run(inst)
    assert sol.iterations <= 2 and sol.objective == pytest.approx(1600.0)


def test_iteration_cap_flags_not_converged():
    inst = prepare(generate_scenario(seed=5))
    sol = benders.run(inst, gap_tol=0.0, max_iters=1)
    assert sol.iterations == 1
    if sol.status != "optimal":
        assert sol.status == "not_converged" and sol.gap > 0
    assert sol.log[0]["cuts"] == 1


def test_log_columns():
    sol = benders.run(prepare(toy_scenario()))
    assert list(sol.log[0]) == ["iteration", "master_bound", "incumbent", "gap", "subproblem_time",
                                "master_time", "cuts", "subproblem_value"]


def test_feasibility_cut_machinery():
    inst = prepare(toy_scenario())
    dec = benders.Decomposition(inst)
    x = dec.binary_part(first_path_assignment(inst))
    with pytest.raises(ValueError):
        benders.make_feasibility_cut(dec, x)
    # force infeasibility with an impossible initial-stock row
    c6 = inst.rows_of("C6")[0]
    inst.b[c6] = -1.0
    dec = benders.Decomposition(inst)
    with pytest.raises(benders.SubproblemInfeasible, match="C6"):
        benders.solve_subproblem(dec, x)
    cut = benders.make_feasibility_cut(dec, x)
    assert cut.kind == "feasibility" and cut.theta_coef == 0.0
    assert cut.violation(x, 0.0) > 0


def test_monolithic_agrees_on_toy():
    inst = prepare(toy_scenario())
    assert benders.run(inst).objective == pytest.approx(benders.solve_monolithic(inst).objective, rel=1e-9)
