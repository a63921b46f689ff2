from __future__ import annotations

import pytest

from satqn.topology import Link, LinkKind, Node, NodeKind, Scenario


def line_scenario(capacities=(800.0,), fidelity=1.0, slots=1, weights=None, *, hops=1, delta=20.0):
    """Ground chain G0 - G1 - ... with one user pair end to end."""
    ids = [f"G{i}" for i in range(hops + 1)]
    nodes = tuple(Node(i, NodeKind.TERRESTRIAL) for i in ids)
    links = []
    for i in range(hops):
        cap = capacities[i] if len(capacities) > i else capacities[-1]
        links.append(Link((ids[i], ids[i + 1]), LinkKind.G2G, (float(cap),) * slots, fidelity, (True,) * slots))
    w = weights or ((1.0,) * slots,)
    return Scenario(nodes, tuple(links), ((ids[0], ids[-1]),), w, slots, delta, (0.9,), name="line")


@pytest.fixture
def line():
    return line_scenario
