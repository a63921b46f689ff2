"""Time-varying satellite-aerial-terrestrial network description.

Slots are numbered ``1..T`` everywhere in the public API; per-slot arrays are
stored 0-based, so slot ``t`` lives at index ``t - 1``.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping


class NodeKind(str, enum.Enum):
    SATELLITE = "satellite"
    AERIAL = "aerial"
    TERRESTRIAL = "terrestrial"

    @property
    def letter(self) -> str:
        return {"satellite": "S", "aerial": "A", "terrestrial": "G"}[self.value]


class LinkKind(str, enum.Enum):
    S2S = "S2S"
    S2A = "S2A"
    A2A = "A2A"
    S2G = "S2G"
    A2G = "A2G"
    G2G = "G2G"


_RANK = {NodeKind.SATELLITE: 0, NodeKind.AERIAL: 1, NodeKind.TERRESTRIAL: 2}


def link_kind(a: NodeKind, b: NodeKind) -> LinkKind:
    """Link class implied by two endpoint kinds (order-insensitive)."""
    lo, hi = sorted((a, b), key=_RANK.__getitem__)
    return LinkKind(lo.letter + "2" + hi.letter)


def edge_key(u: str, v: str) -> tuple[str, str]:
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    storage_capacity: float = 0.0

    @property
    def is_storage(self) -> bool:
        return self.storage_capacity > 0


@dataclass(frozen=True)
class Link:
    """Undirected link with per-slot EGR capacity (pairs/s) and activity."""

    endpoints: tuple[str, str]
    kind: LinkKind
    capacity: tuple[float, ...]
    fidelity: float
    active: tuple[bool, ...]

    @property
    def key(self) -> tuple[str, str]:
        return edge_key(*self.endpoints)


@dataclass(frozen=True)
class Scenario:
    """Complete routing problem instance.

    ``weights[k][t-1]`` is the throughput weight of user pair ``k`` in slot
    ``t``.  ``initial_storage`` maps ``(storage pair, storage path node
    sequence)`` to the stock held at the start of slot 1; storage pairs and
    path keys are normalized so the pair is sorted and the path runs from the
    pair's first node to its second.
    """

    nodes: tuple[Node, ...]
    links: tuple[Link, ...]
    user_pairs: tuple[tuple[str, str], ...]
    weights: tuple[tuple[float, ...], ...]
    slots: int
    slot_duration: float
    fidelity_thresholds: tuple[float, ...]
    initial_storage: Mapping = field(default_factory=dict)
    storage_threshold: float | None = None
    max_hops: int = 6
    max_paths: int = 10
    rng_seed: int = 0
    name: str = "scenario"

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "user_pairs", tuple(tuple(p) for p in self.user_pairs))
        object.__setattr__(self, "weights", tuple(tuple(float(a) for a in w) for w in self.weights))
        object.__setattr__(self, "fidelity_thresholds", tuple(float(f) for f in self.fidelity_thresholds))
        stock = {}
        for (pair, path), v in dict(self.initial_storage).items():
            pair = edge_key(*pair)
            path = tuple(path)
            if path and path[0] != pair[0]:
                path = path[::-1]
            stock[(pair, path)] = float(v)
        object.__setattr__(self, "initial_storage", MappingProxyType(stock))

    # convenience lookups (cheap; recomputed on demand to stay frozen)
    @property
    def node_map(self) -> dict[str, Node]:
        return {n.id: n for n in self.nodes}

    @property
    def link_map(self) -> dict[tuple[str, str], Link]:
        return {l.key: l for l in self.links}

    @property
    def n_pairs(self) -> int:
        return len(self.user_pairs)

    @property
    def store_threshold(self) -> float:
        """Purification target for storage-pair generation paths."""
        if self.storage_threshold is not None:
            return self.storage_threshold
        return max(self.fidelity_thresholds, default=0.95)

    def storage_nodes(self) -> list[Node]:
        return [n for n in self.nodes if n.is_storage]


@dataclass(frozen=True)
class Diagnostic:
    invariant: str
    entity: str
    message: str

    def __str__(self) -> str:
        return f"[{self.invariant}] {self.entity}: {self.message}"


def validate_scenario(s: Scenario) -> list[Diagnostic]:
    """Check every scenario invariant; an empty list means the scenario is valid."""
    out: list[Diagnostic] = []
    ids = [n.id for n in s.nodes]
    for nid, cnt in sorted(_counts(ids).items()):
        if cnt > 1:
            out.append(Diagnostic("unique-node-id", f"node {nid}", f"id used {cnt} times"))
    nodes = {n.id: n for n in s.nodes}
    for n in s.nodes:
        if not (n.storage_capacity >= 0 and math.isfinite(n.storage_capacity)):
            out.append(Diagnostic("storage-capacity", f"node {n.id}",
                                  f"storage capacity {n.storage_capacity} must be finite and >= 0"))
    if s.slots < 1:
        out.append(Diagnostic("slots", "scenario", f"T = {s.slots} must be >= 1"))
    if not s.slot_duration > 0:
        out.append(Diagnostic("slot-duration", "scenario", f"delta = {s.slot_duration} must be > 0"))
    if s.max_hops < 1 or s.max_paths < 1:
        out.append(Diagnostic("path-limits", "scenario", "hop and path limits must be >= 1"))
    seen: set[tuple[str, str]] = set()
    for l in s.links:
        name = f"link {l.endpoints[0]}-{l.endpoints[1]}"
        a, b = l.endpoints
        if a == b:
            out.append(Diagnostic("link-endpoints", name, "self loop"))
        if a not in nodes or b not in nodes:
            out.append(Diagnostic("link-endpoints", name, "endpoint not in node set"))
            continue
        if l.key in seen:
            out.append(Diagnostic("link-unique", name, "duplicate link"))
        seen.add(l.key)
        want = link_kind(nodes[a].kind, nodes[b].kind)
        if l.kind != want:
            out.append(Diagnostic("link-kind", name, f"kind {l.kind.value} but endpoints imply {want.value}"))
        if len(l.capacity) != s.slots or len(l.active) != s.slots:
            out.append(Diagnostic("link-schedule", name, f"per-slot arrays must have length {s.slots}"))
        else:
            for t, (cap, on) in enumerate(zip(l.capacity, l.active), start=1):
                if not (cap >= 0 and math.isfinite(cap)):
                    out.append(Diagnostic("link-capacity", name, f"slot {t}: capacity {cap} must be finite and >= 0"))
                elif not on and cap != 0:
                    out.append(Diagnostic("link-capacity", name, f"slot {t}: inactive link has capacity {cap}"))
        if not (0.5 < l.fidelity <= 1.0):
            out.append(Diagnostic("link-fidelity", name, f"fidelity {l.fidelity} outside (0.5, 1]"))
    if len(s.weights) != s.n_pairs:
        out.append(Diagnostic("weights", "scenario", "one weight row per user pair required"))
    if len(s.fidelity_thresholds) != s.n_pairs:
        out.append(Diagnostic("fidelity-threshold", "scenario", "one threshold per user pair required"))
    for k, (src, dst) in enumerate(s.user_pairs):
        name = f"user pair {k} ({src}, {dst})"
        if src == dst:
            out.append(Diagnostic("user-pair-endpoints", name, "source equals destination"))
        for end in (src, dst):
            if end not in nodes:
                out.append(Diagnostic("user-pair-endpoints", name, f"{end} not in node set"))
            elif nodes[end].kind is not NodeKind.TERRESTRIAL:
                out.append(Diagnostic("user-pair-endpoints", name,
                                      f"{end} is {nodes[end].kind.value}, must be terrestrial"))
        if k < len(s.weights):
            w = s.weights[k]
            if len(w) != s.slots or any(not (a >= 0 and math.isfinite(a)) for a in w):
                out.append(Diagnostic("weights", name, "weights must be T finite nonnegative values"))
        if k < len(s.fidelity_thresholds):
            f = s.fidelity_thresholds[k]
            if not (0.5 < f < 1.0):
                out.append(Diagnostic("fidelity-threshold", name, f"threshold {f} outside (0.5, 1)"))
    if s.storage_threshold is not None and not (0.5 < s.storage_threshold < 1.0):
        out.append(Diagnostic("fidelity-threshold", "storage", f"threshold {s.storage_threshold} outside (0.5, 1)"))
    held: dict[str, float] = {}
    for (pair, path), v in s.initial_storage.items():
        name = f"initial storage {pair}"
        if not (v >= 0 and math.isfinite(v)):
            out.append(Diagnostic("initial-storage", name, f"stock {v} must be finite and >= 0"))
        for m in pair:
            if m not in nodes or not nodes[m].is_storage:
                out.append(Diagnostic("initial-storage", name, f"{m} is not a storage node"))
            else:
                held[m] = held.get(m, 0.0) + v
        if not path or path[0] != pair[0] or path[-1] != pair[1]:
            out.append(Diagnostic("initial-storage", name, "path must join the storage pair"))
    for m, total in sorted(held.items()):
        if total > nodes[m].storage_capacity + 1e-9:
            out.append(Diagnostic("initial-storage", f"node {m}",
                                  f"initial stock {total} exceeds storage capacity {nodes[m].storage_capacity}"))
    return out


def _counts(items) -> dict:
    out: dict = {}
    for it in items:
        out[it] = out.get(it, 0) + 1
    return out


@dataclass(frozen=True)
class Snapshot:
    """Static graph of one slot: active links and their capacity."""

    t: int
    nodes: tuple[str, ...]
    capacity: Mapping[tuple[str, str], float]

    @property
    def links(self) -> tuple[tuple[str, str], ...]:
        return tuple(self.capacity)

    def neighbors(self, u: str) -> list[str]:
        return sorted({b if a == u else a for a, b in self.capacity if u in (a, b)})


def snapshot(s: Scenario, t: int) -> Snapshot:
    if not 1 <= t <= s.slots:
        raise IndexError(f"slot {t} outside 1..{s.slots}")
    cap = {l.key: l.capacity[t - 1] for l in s.links if l.active[t - 1]}
    return Snapshot(t, tuple(n.id for n in s.nodes), MappingProxyType(cap))


def storage_pairs(s: Scenario) -> list[tuple[str, str]]:
    """All unordered pairs of distinct storage nodes, each sorted, in sorted order."""
    ids = sorted(n.id for n in s.nodes if n.is_storage)
    return list(itertools.combinations(ids, 2))
