from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from satqn.baselines import prepare
from satqn.fidelity import annotate_costs
from satqn.harness.generator import generate_scenario, random_small_scenario, toy_scenario
from satqn.model import (NULL, ModelBuildError, build, decode, feasibility_witness, first_path_assignment,
                         path_capacity, residuals)
from satqn.pathing import RouteOption, build_path_table
from satqn.topology import storage_pairs

from conftest import line_scenario


def families(inst):
    return {r.family for r in inst.row_tags}


def test_no_storage_single_slot_families():
    inst = prepare(line_scenario())
    assert families(inst) == {"C1", "C2", "C4"}
    assert not inst.index.z
    assert {t.var for t in inst.index.tags} == {"x", "y"}


def test_toy_c6_row_census():
    s = toy_scenario(slots=2)
    inst = prepare(s)
    n_paths = len(inst.table.storage[("2", "5")])
    c6 = inst.rows_of("C6")
    assert len(c6) == n_paths * 1 + n_paths
    assert families(inst) == {"C1", "C2", "C3", "C4", "C5", "C6"}


def test_default_scenario_binary_census():
    s = generate_scenario()
    inst = prepare(s)
    expect = sum(len(o) for o in inst.table.user) * s.slots
    assert inst.binary_cols.size == expect <= 3 * 10 * 10


def test_path_capacity_examples():
    s = line_scenario((800.0,))
    table = annotate_costs(build_path_table(s), s)
    o = table.user[0][0]
    assert o.cost == 1.0
    assert path_capacity(0, o, 1, s) == 800.0
    s2 = line_scenario((400.0, 1600.0), hops=2)
    o2 = replace(annotate_costs(build_path_table(s2), s2).user[0][0], cost=2.0)
    assert path_capacity(0, o2, 1, s2) == 200.0


def test_path_capacity_rejects_inactive_and_unannotated():
    s = line_scenario()
    raw = build_path_table(s).user[0][0]
    with pytest.raises(ModelBuildError):
        path_capacity(0, raw, 1, s)
    with pytest.raises(ModelBuildError):
        build(s, build_path_table(s))
    dead = replace(raw, path=replace(raw.path, valid=(False,)), cost=1.0)
    with pytest.raises(ValueError):
        path_capacity(0, dead, 1, s)


def test_null_option_when_no_path():
    s = line_scenario(slots=2)
    link = replace(s.links[0], active=(True, False), capacity=(800.0, 0.0))
    inst = prepare(replace(s, links=(link,)))
    pids = {inst.index.tags[c].pid for c in inst.groups[(0, 2)]}
    assert pids == {NULL}


def test_zero_candidate_flags_only_c2():
    inst = prepare(line_scenario())
    vec = np.zeros(inst.n_cols)
    rep = residuals(inst, vec)
    assert {r.family for r in rep.flagged_rows} == {"C2"}
    assert residuals(inst, first_path_assignment(inst)).clean


def test_single_c4_violation_flagged():
    s = line_scenario((800.0, 500.0), hops=2)
    inst = prepare(s)
    vec = feasibility_witness(inst)
    col = inst.index.y[(0, "H0", 1)]
    g = inst.table.user[0][0].cost
    vec[col] = (500.0 + 1.0) / g
    # make C1 hold so only the capacity row can flag
    inst.ub[col] = np.inf
    rep = residuals(inst, vec)
    bad = [r for r in rep.flagged_rows if r.family != "C1"]
    assert [r.name for r in bad] == ["C4_G1_G2_1"]
    assert rep.residuals[inst.row_tags.index(bad[0])] == pytest.approx(1.0)


def test_integrality_and_bounds_checked():
    inst = prepare(line_scenario())
    vec = first_path_assignment(inst)
    vec[inst.binary_cols[0]] = 1.0 - 1e-6
    rep = residuals(inst, vec)
    assert rep.integrality_violations and rep.max_by_family["C7"] == 0.0
    vec = first_path_assignment(inst)
    vec[inst.index.y[(0, "H0", 1)]] = -1.0
    assert residuals(inst, vec).bound_violations
    with pytest.raises(ValueError):
        residuals(inst, np.zeros(inst.n_cols + 1))


@pytest.mark.parametrize("seed", range(15))
def test_witness_is_feasible(seed):
    inst = prepare(random_small_scenario(seed))
    assert residuals(inst, feasibility_witness(inst)).clean


def test_initial_stock_carried_by_witness():
    s = toy_scenario()
    s = replace(s, initial_storage={(("2", "5"), ("2", "3", "5")): 300.0})
    inst = prepare(s)
    vec = feasibility_witness(inst)
    pid = next(o.pid for o in inst.table.storage[("2", "5")] if o.path.nodes == ("2", "3", "5"))
    assert vec[inst.index.z[(("2", "5"), pid, 2)]] == 300.0
    assert residuals(inst, vec).clean


def test_build_is_deterministic():
    s = generate_scenario(seed=3)
    a, b = prepare(s), prepare(s)
    assert [t.name for t in a.index.tags] == [t.name for t in b.index.tags]
    assert [r.name for r in a.row_tags] == [r.name for r in b.row_tags]
    assert (a.A != b.A).nnz == 0


def test_decode_total_pairs_counts_user_rates_times_delta():
    s = line_scenario(delta=5.0)
    inst = prepare(s)
    vec = first_path_assignment(inst)
    vec[inst.index.y[(0, "H0", 1)]] = 100.0
    sol = decode(inst, vec, "test", "optimal")
    assert sol.total_pairs == 500.0 and sol.objective == 100.0
    assert sol.selection == {(0, 1): "H0"}
