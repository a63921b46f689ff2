"""Random three-layer scenarios: two satellites, two HAPs, two ground cities.

Layout
    * each city has ``city_size`` ground stations joined by a ring plus the
      chords ``i -- i + city_size // 2``;
    * every ground station links to both HAPs and both satellites;
    * the HAPs link to each other and to both satellites, the satellites
      link to each other;
    * the two cities are joined only through the HAP and satellite layers.

User pair ``k`` runs from ``SRC{k+1}`` to ``DST{k+1}``.  Link attributes are
drawn from one stream in a fixed link order that does not depend on the
number of user pairs, so scenarios sharing a seed differ only in the pairs
they serve.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..topology import Link, Node, NodeKind, Scenario, link_kind, validate_scenario


class ScenarioConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorParams:
    n_pairs: int = 3
    city_size: int = 6
    slots: int = 10
    slot_duration: float = 20.0
    free_space_capacity: tuple[float, float] = (200.0, 1400.0)
    ground_capacity: tuple[float, float] = (400.0, 1600.0)
    fidelity: tuple[float, float] = (0.96, 0.99)
    storage_capacity: float = 1500.0
    storage_nodes: tuple[str, ...] = ("SAT1", "SAT2", "HAP1", "HAP2")
    fidelity_threshold: float = 0.95
    storage_threshold: float | None = None
    weight: float = 1.0
    # (u, v, slot) triples: link u-v is down in that slot
    outages: tuple[tuple[str, str, int], ...] = ()
    capacity_overrides: dict = field(default_factory=dict)
    max_hops: int = 6
    max_paths: int = 10

    def with_(self, **kw) -> "GeneratorParams":
        return replace(self, **kw)


def _check(p: GeneratorParams) -> None:
    if not 1 <= p.n_pairs <= p.city_size:
        raise ScenarioConfigError(f"n_pairs = {p.n_pairs} needs 1..{p.city_size} ground pairs")
    if p.city_size < 2:
        raise ScenarioConfigError("a city needs at least two ground stations")
    if p.slots < 1 or not p.slot_duration > 0:
        raise ScenarioConfigError("need at least one slot of positive duration")
    for name in ("free_space_capacity", "ground_capacity"):
        lo, hi = getattr(p, name)
        if not 0 <= lo <= hi:
            raise ScenarioConfigError(f"{name} range ({lo}, {hi}) is invalid")
    lo, hi = p.fidelity
    if not 0.5 < lo <= hi <= 1.0:
        raise ScenarioConfigError(f"fidelity range ({lo}, {hi}) must lie in (0.5, 1]")
    if p.storage_capacity < 0:
        raise ScenarioConfigError("storage capacity must be >= 0")
    if not 0.5 < p.fidelity_threshold < 1.0:
        raise ScenarioConfigError("fidelity threshold must lie in (0.5, 1)")
    if p.weight < 0:
        raise ScenarioConfigError("weights must be >= 0")


def _layout(city_size: int) -> tuple[list[Node], list[tuple[str, str]]]:
    sats = [f"SAT{i}" for i in (1, 2)]
    haps = [f"HAP{i}" for i in (1, 2)]
    src = [f"SRC{i + 1}" for i in range(city_size)]
    dst = [f"DST{i + 1}" for i in range(city_size)]
    nodes = ([Node(n, NodeKind.SATELLITE) for n in sats] + [Node(n, NodeKind.AERIAL) for n in haps]
             + [Node(n, NodeKind.TERRESTRIAL) for n in src + dst])
    pairs: list[tuple[str, str]] = [("SAT1", "SAT2"), ("HAP1", "HAP2")]
    pairs += [(s, h) for s in sats for h in haps]
    for city in (src, dst):
        for g in city:
            pairs += [(h, g) for h in haps] + [(s, g) for s in sats]
        n = len(city)
        ring = {tuple(sorted((city[i], city[(i + 1) % n]))) for i in range(n)}
        chords = {tuple(sorted((city[i], city[i + n // 2]))) for i in range(n - n // 2) if n >= 4}
        pairs += sorted(ring | chords)
    return nodes, pairs


def generate_scenario(params: GeneratorParams | None = None, seed: int = 0) -> Scenario:
    """Deterministic scenario for ``params`` and ``seed``."""
    p = GeneratorParams() if params is None else params
    _check(p)
    nodes, pairs = _layout(p.city_size)
    ids = {n.id for n in nodes}
    unknown = set(p.storage_nodes) - ids
    if unknown:
        raise ScenarioConfigError(f"unknown storage nodes: {sorted(unknown)}")
    nodes = [replace(n, storage_capacity=p.storage_capacity if n.id in p.storage_nodes else 0.0)
             for n in nodes]
    kinds = {n.id: n.kind for n in nodes}
    down = {}
    for u, v, t in p.outages:
        if not 1 <= t <= p.slots:
            raise ScenarioConfigError(f"outage slot {t} outside 1..{p.slots}")
        down.setdefault(tuple(sorted((u, v))), set()).add(t)
    rng = np.random.default_rng(seed)
    links = []
    for a, b in pairs:
        kind = link_kind(kinds[a], kinds[b])
        lo, hi = p.ground_capacity if kind.value == "G2G" else p.free_space_capacity
        cap = rng.uniform(lo, hi, size=p.slots)
        fid = float(rng.uniform(*p.fidelity))
        key = tuple(sorted((a, b)))
        if key in p.capacity_overrides:
            cap = np.broadcast_to(np.asarray(p.capacity_overrides[key], dtype=float), (p.slots,))
        active = tuple(t + 1 not in down.get(key, ()) for t in range(p.slots))
        cap = tuple(float(round(c, 6)) if on else 0.0 for c, on in zip(cap, active))
        links.append(Link((a, b), kind, cap, round(fid, 9), active))
    K = p.n_pairs
    s = Scenario(
        nodes=tuple(nodes), links=tuple(links),
        user_pairs=tuple((f"SRC{k + 1}", f"DST{k + 1}") for k in range(K)),
        weights=tuple((p.weight,) * p.slots for _ in range(K)),
        slots=p.slots, slot_duration=p.slot_duration,
        fidelity_thresholds=(p.fidelity_threshold,) * K,
        storage_threshold=p.storage_threshold,
        max_hops=p.max_hops, max_paths=p.max_paths, rng_seed=seed,
        name=f"generated-s{seed}-k{K}",
    )
    bad = validate_scenario(s)
    if bad:
        raise ScenarioConfigError("; ".join(map(str, bad)))
    return s


def random_small_scenario(seed: int, max_nodes: int = 8, max_pairs: int = 2, max_slots: int = 3,
                          max_paths: int = 3, max_hops: int = 4, outage_rate: float = 0.15) -> Scenario:
    """Small random connected scenario used for oracle comparisons.

    Relays are satellites or HAPs (some with storage and initial stock),
    endpoints are ground stations.  Links go down at random per slot.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, max_nodes + 1))
    n_ground = int(rng.integers(2, max(3, n - 1)))
    n_sat = int(rng.integers(0, n - n_ground + 1))
    kinds = ([NodeKind.TERRESTRIAL] * n_ground + [NodeKind.SATELLITE] * n_sat
             + [NodeKind.AERIAL] * (n - n_ground - n_sat))
    ids = [f"{k.letter}{i}" for i, k in enumerate(kinds)]
    T = int(rng.integers(1, max_slots + 1))
    edges = set()
    order = rng.permutation(n)
    for i in range(1, n):
        a, b = int(order[i]), int(order[rng.integers(i)])
        edges.add((min(a, b), max(a, b)))
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < 0.35:
                edges.add((a, b))
    links = []
    for a, b in sorted(edges):
        active = tuple(bool(rng.random() >= outage_rate) for _ in range(T))
        cap = tuple(float(round(rng.uniform(20, 400), 3)) if on else 0.0 for on in active)
        links.append(Link((ids[a], ids[b]), link_kind(kinds[a], kinds[b]), cap,
                          float(round(rng.uniform(0.93, 0.995), 6)), active))
    nodes = []
    for i, k in enumerate(kinds):
        store = k is not NodeKind.TERRESTRIAL and rng.random() < 0.7
        nodes.append(Node(ids[i], k, float(round(rng.uniform(50, 3000), 3)) if store else 0.0))
    ground = [ids[i] for i in range(n_ground)]
    K = int(rng.integers(1, min(max_pairs, n_ground // 2 if n_ground >= 4 else 1) + 1))
    picks = rng.permutation(len(ground))
    pairs = tuple((ground[picks[2 * k]], ground[picks[2 * k + 1]]) for k in range(K))
    weights = tuple(tuple(float(round(rng.uniform(0.2, 2.0), 4)) for _ in range(T)) for _ in range(K))
    th = tuple(float(round(rng.uniform(0.86, 0.95), 4)) for _ in range(K))
    s = Scenario(tuple(nodes), tuple(links), pairs, weights, T, float(rng.choice([1.0, 5.0, 20.0])), th,
                 max_hops=max_hops, max_paths=max_paths, rng_seed=seed, name=f"small-{seed}")
    # optional initial stock on a direct storage link
    store = [m.id for m in nodes if m.is_storage]
    init = {}
    for (a, b) in sorted(edges):
        if ids[a] in store and ids[b] in store and rng.random() < 0.5:
            cap = min(nodes[a].storage_capacity, nodes[b].storage_capacity)
            init[((ids[a], ids[b]), (ids[a], ids[b]))] = float(round(rng.uniform(0, 0.3) * cap, 3))
    if init:
        s = replace(s, initial_storage=init)
        if validate_scenario(s):
            s = replace(s, initial_storage={})
    return s


def toy_scenario(slots: int = 2, capacity: float = 800.0, fidelity: float = 0.98,
                 storage_capacity: float = 1000.0) -> Scenario:
    """Six-node diamond: 1 - 2 - {3, 4} - 5 - 6 with storage at 2 and 5."""
    kinds = {"1": NodeKind.TERRESTRIAL, "2": NodeKind.AERIAL, "3": NodeKind.SATELLITE,
             "4": NodeKind.SATELLITE, "5": NodeKind.AERIAL, "6": NodeKind.TERRESTRIAL}
    nodes = tuple(Node(i, k, storage_capacity if i in ("2", "5") else 0.0) for i, k in kinds.items())
    edges = [("1", "2"), ("2", "3"), ("2", "4"), ("3", "5"), ("4", "5"), ("5", "6")]
    links = tuple(Link(e, link_kind(kinds[e[0]], kinds[e[1]]), (capacity,) * slots, fidelity,
                       (True,) * slots) for e in edges)
    return Scenario(nodes, links, (("1", "6"),), ((1.0,) * slots,), slots, 10.0, (0.9,),
                    max_hops=5, max_paths=4, name="toy")
