from __future__ import annotations

from dataclasses import replace

import pytest

from satqn.harness.generator import generate_scenario, toy_scenario
from satqn.topology import (Link, LinkKind, Node, NodeKind, edge_key, link_kind, snapshot,
                            storage_pairs, validate_scenario)


def test_default_scenario_is_valid():
    assert validate_scenario(generate_scenario()) == []


def test_satellite_source_flagged():
    s = generate_scenario()
    s = replace(s, user_pairs=(("SAT1", "DST1"),) + s.user_pairs[1:])
    bad = validate_scenario(s)
    assert len(bad) == 1
    assert bad[0].invariant == "user-pair-endpoints" and "SAT1" in bad[0].entity


def test_low_link_fidelity_flagged():
    s = generate_scenario()
    l0 = replace(s.links[0], fidelity=0.4)
    bad = validate_scenario(replace(s, links=(l0,) + s.links[1:]))
    assert len(bad) == 1 and bad[0].invariant == "link-fidelity"
    assert "-".join(l0.endpoints) in bad[0].entity


def test_other_invariants():
    s = toy_scenario()
    inactive_cap = replace(s.links[0], active=(False, True))
    assert [d.invariant for d in validate_scenario(replace(s, links=(inactive_cap,) + s.links[1:]))] == ["link-capacity"]
    wrong_kind = replace(s.links[0], kind=LinkKind.S2S)
    assert [d.invariant for d in validate_scenario(replace(s, links=(wrong_kind,) + s.links[1:]))] == ["link-kind"]
    over = replace(s, initial_storage={(("2", "5"), ("2", "3", "5")): 5000.0})
    assert {d.invariant for d in validate_scenario(over)} == {"initial-storage"}
    assert validate_scenario(replace(s, slot_duration=0.0))[0].invariant == "slot-duration"


def test_link_kind_is_symmetric():
    S, A, G = NodeKind.SATELLITE, NodeKind.AERIAL, NodeKind.TERRESTRIAL
    assert link_kind(G, S) is link_kind(S, G) is LinkKind.S2G
    assert link_kind(A, G) is LinkKind.A2G
    assert link_kind(A, A) is LinkKind.A2A
    assert edge_key("b", "a") == ("a", "b")


def test_snapshot_all_active():
    s = generate_scenario()
    for t in range(1, s.slots + 1):
        snap = snapshot(s, t)
        assert len(snap.links) == len(s.links)
        assert len(snap.nodes) == 16


def test_snapshot_drops_inactive_link():
    s = toy_scenario()
    l0 = replace(s.links[0], active=(True, False), capacity=(800.0, 0.0))
    s = replace(s, links=(l0,) + s.links[1:])
    assert l0.key in snapshot(s, 1).capacity
    assert l0.key not in snapshot(s, 2).capacity
    assert snapshot(s, 1).neighbors("2") == ["1", "3", "4"]
    with pytest.raises(IndexError):
        snapshot(s, 3)
    with pytest.raises(IndexError):
        snapshot(s, 0)


def test_storage_pairs():
    s = toy_scenario()
    assert storage_pairs(s) == [("2", "5")]
    none = replace(s, nodes=tuple(replace(n, storage_capacity=0.0) for n in s.nodes))
    assert storage_pairs(none) == []
    three = replace(s, nodes=tuple(replace(n, storage_capacity=10.0) if n.id in "235" else n for n in s.nodes))
    assert storage_pairs(three) == [("2", "3"), ("2", "5"), ("3", "5")]


def test_initial_storage_key_normalized():
    s = replace(toy_scenario(), initial_storage={(("5", "2"), ("5", "3", "2")): 7.0})
    assert dict(s.initial_storage) == {(("2", "5"), ("2", "3", "5")): 7.0}
