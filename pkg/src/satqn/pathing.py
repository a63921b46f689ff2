"""Physical and virtual path enumeration.

A virtual path replaces a stretch of a route between the two nodes of a
storage pair with a virtual link.  Each virtual link stands for one physical
sub-path of that storage pair, so the same virtual-graph node sequence can
appear several times with different sub-paths (parallel virtual links).

Rules used throughout:

* paths are ordered by hop count, then lexicographically by node ids;
* a virtual path carries exactly one virtual hop, and that hop expands to a
  physical sub-path of the storage pair (no nesting);
* the hop bound applies to the expanded route, which must itself be simple;
* a virtual path is usable in slot ``t`` when its physical hops are active in
  ``t``.  The virtual hop draws on stored pairs, so its sub-path need not be
  active at that time.
"""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterator, Union

from .topology import Scenario, edge_key, storage_pairs

StoragePair = tuple[str, str]


def _edges(nodes: tuple[str, ...]) -> tuple[tuple[str, str], ...]:
    return tuple(edge_key(a, b) for a, b in zip(nodes, nodes[1:]))


@dataclass(frozen=True)
class PhysicalPath:
    nodes: tuple[str, ...]
    valid: tuple[bool, ...]

    is_virtual = False

    @property
    def edges(self) -> tuple[tuple[str, str], ...]:
        return _edges(self.nodes)

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1

    @property
    def expansion(self) -> tuple[str, ...]:
        return self.nodes

    @property
    def loaded_edges(self) -> tuple[tuple[str, str], ...]:
        """Edges whose capacity this path consumes in its own slot."""
        return self.edges

    def valid_at(self, t: int) -> bool:
        return self.valid[t - 1]

    def label(self) -> str:
        return "-".join(self.nodes)


@dataclass(frozen=True)
class VirtualPath:
    """Route whose hop ``nodes[hop] -> nodes[hop + 1]`` is a virtual link.

    ``sub`` is the storage pair's physical sub-path exactly as it appears in
    that pair's path list (running from ``pair[0]`` to ``pair[1]``);
    ``reversed_sub`` records that the route crosses it the other way.
    """

    nodes: tuple[str, ...]
    hop: int
    pair: StoragePair
    sub: PhysicalPath
    reversed_sub: bool
    valid: tuple[bool, ...]

    is_virtual = True

    @property
    def expansion(self) -> tuple[str, ...]:
        inner = self.sub.nodes[::-1] if self.reversed_sub else self.sub.nodes
        return self.nodes[: self.hop] + inner + self.nodes[self.hop + 2:]

    @property
    def edges(self) -> tuple[tuple[str, str], ...]:
        return _edges(self.expansion)

    @property
    def hops(self) -> int:
        return len(self.expansion) - 1

    @property
    def loaded_edges(self) -> tuple[tuple[str, str], ...]:
        pre = _edges(self.nodes[: self.hop + 1])
        post = _edges(self.nodes[self.hop + 1:])
        return pre + post

    def valid_at(self, t: int) -> bool:
        return self.valid[t - 1]

    def label(self) -> str:
        head = "-".join(self.nodes[: self.hop + 1])
        tail = "-".join(self.nodes[self.hop + 1:])
        return f"{head}~[{self.sub.label()}]~{tail}"

Path = Union[PhysicalPath, VirtualPath]


def expand(p: Path) -> PhysicalPath:
    """Complete physical route of ``p``; identity on physical paths."""
    if not p.is_virtual:
        return p
    return PhysicalPath(p.expansion, p.valid)


@dataclass(frozen=True)
class RouteOption:
    """One (pair, path) entry of a :class:`PathTable`."""

    pid: str
    path: Path
    fidelity: float | None = None
    cost: float | None = None
    rounds: int | None = None

    @property
    def kind(self) -> str:
        return "U" if self.path.is_virtual else "H"


@dataclass(frozen=True)
class PathTable:
    user: tuple[tuple[RouteOption, ...], ...]
    storage: dict[StoragePair, tuple[RouteOption, ...]] = field(default_factory=dict)

    def options(self) -> Iterator[tuple[object, RouteOption]]:
        """Yield ``(owner, option)`` with owner ``k`` (int) or a storage pair."""
        for k, opts in enumerate(self.user):
            for o in opts:
                yield k, o
        for n, opts in self.storage.items():
            for o in opts:
                yield n, o

    def for_owner(self, owner) -> tuple[RouteOption, ...]:
        return self.user[owner] if isinstance(owner, int) else self.storage[owner]

    def sub_option(self, pair: StoragePair, sub: PhysicalPath) -> RouteOption:
        for o in self.storage[pair]:
            if o.path == sub:
                return o
        raise KeyError(f"sub-path {sub.label()} not in storage pair {pair}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["pair", "path_id", "kind", "nodes", "expansion", "fidelity", "cost", "valid"])
        for owner, o in self.options():
            name = f"k{owner}" if isinstance(owner, int) else f"n{owner[0]}~{owner[1]}"
            w.writerow([name, o.pid, o.kind, " ".join(o.path.nodes), " ".join(o.path.expansion),
                        "" if o.fidelity is None else f"{o.fidelity:.12g}",
                        "" if o.cost is None else f"{o.cost:.12g}",
                        "".join("1" if v else "0" for v in o.path.valid)])
        return buf.getvalue()


class _Graph:
    def __init__(self, s: Scenario):
        self.adj: dict[str, list[str]] = {n.id: [] for n in s.nodes}
        self.active: dict[tuple[str, str], tuple[bool, ...]] = {}
        for l in s.links:
            a, b = l.endpoints
            self.adj.setdefault(a, []).append(b)
            self.adj.setdefault(b, []).append(a)
            self.active[l.key] = l.active
        for u in self.adj:
            self.adj[u] = sorted(set(self.adj[u]))
        self.slots = s.slots
        self._dist: dict[str, dict[str, int]] = {}

    def dist_to(self, dst: str) -> dict[str, int]:
        if dst not in self._dist:
            d = {dst: 0}
            q = deque([dst])
            while q:
                u = q.popleft()
                for v in self.adj.get(u, ()):
                    if v not in d:
                        d[v] = d[u] + 1
                        q.append(v)
            self._dist[dst] = d
        return self._dist[dst]

    def mask(self, edges) -> tuple[bool, ...]:
        return tuple(all(self.active[e][t] for e in edges) for t in range(self.slots))


def _paths_exact(g: _Graph, src: str, dst: str, hops: int) -> Iterator[tuple[str, ...]]:
    """Simple paths with exactly ``hops`` hops, in lexicographic order."""
    dist = g.dist_to(dst)
    if dist.get(src, hops + 1) > hops:
        return
    path = [src]
    seen = {src}

    def rec(u: str, left: int):
        if left == 0:
            if u == dst:
                yield tuple(path)
            return
        if u == dst:
            return
        for v in g.adj[u]:
            if v in seen or dist.get(v, left) > left - 1:
                continue
            path.append(v)
            seen.add(v)
            yield from rec(v, left - 1)
            path.pop()
            seen.discard(v)

    yield from rec(src, hops)


def _physical(g: _Graph, src: str, dst: str, H: int, P: int) -> list[PhysicalPath]:
    out: list[PhysicalPath] = []
    if src == dst or P <= 0:
        return out
    for h in range(1, H + 1):
        for nodes in _paths_exact(g, src, dst, h):
            out.append(PhysicalPath(nodes, g.mask(_edges(nodes))))
            if len(out) >= P:
                return out
    return out


def enumerate_physical(s: Scenario, src: str, dst: str, H: int | None = None,
                       P: int | None = None) -> list[PhysicalPath]:
    """Up to ``P`` simple paths of at most ``H`` hops, shortest first then lexicographic."""
    H = s.max_hops if H is None else H
    P = s.max_paths if P is None else P
    ids = {n.id for n in s.nodes}
    if src not in ids or dst not in ids:
        raise KeyError(f"unknown endpoint in ({src}, {dst})")
    if src == dst:
        raise ValueError("source and destination must differ")
    return _physical(_Graph(s), src, dst, H, P)


def _virtual(g: _Graph, src: str, dst: str, H: int, limit: int,
             hops_by_pair: dict[StoragePair, tuple[PhysicalPath, ...]],
             exclude: StoragePair | None = None) -> list[VirtualPath]:
    """Virtual paths with one virtual hop, ordered by expanded length then node sequence."""
    if limit <= 0:
        return []
    hops_from: dict[str, list[tuple[str, StoragePair, int, PhysicalPath, bool]]] = {}
    for pair, subs in hops_by_pair.items():
        if pair == exclude:
            continue
        a, b = pair
        for rank, sub in enumerate(subs):
            hops_from.setdefault(a, []).append((b, pair, rank, sub, False))
            hops_from.setdefault(b, []).append((a, pair, rank, sub, True))
    if not hops_from:
        return []
    dist = g.dist_to(dst)
    found: list[tuple] = []

    def rec(route: list[str], used: set[str], cost: int, vhop, budget: int):
        u = route[-1]
        if u == dst:
            if vhop is not None and cost == budget:
                found.append((tuple(route), vhop))
            return
        left = budget - cost
        if dist.get(u, left + 1) > left:
            return
        for v in g.adj[u]:
            if v in used:
                continue
            route.append(v)
            used.add(v)
            rec(route, used, cost + 1, vhop, budget)
            route.pop()
            used.discard(v)
        if vhop is None:
            for v, pair, rank, sub, rev in hops_from.get(u, ()):
                inner = sub.nodes[::-1] if rev else sub.nodes
                if v in used or any(x in used for x in inner[1:]):
                    continue
                route.append(v)
                grown = set(inner[1:])
                used |= grown
                rec(route, used, cost + sub.hops, (len(route) - 2, pair, rank, sub, rev), budget)
                route.pop()
                used -= grown

    out: list[VirtualPath] = []
    for L in range(2, H + 1):
        found.clear()
        rec([src], {src}, 0, None, L)
        found.sort(key=lambda item: (item[0], item[1][1], item[1][2]))
        for nodes, (hop, pair, _rank, sub, rev) in found:
            loaded = _edges(nodes[: hop + 1]) + _edges(nodes[hop + 1:])
            out.append(VirtualPath(nodes, hop, pair, sub, rev, g.mask(loaded)))
            if len(out) >= limit:
                return out
    return out


def build_path_table(s: Scenario, H: int | None = None, P: int | None = None,
                     allow_virtual: bool = True) -> PathTable:
    """Enumerate physical and virtual path sets for every user and storage pair.

    Storage pairs keep up to ``P`` physical paths and fill any remaining room
    with virtual paths.  User pairs keep up to ``P - P // 2`` physical paths
    and fill the rest with virtual paths, so the physical set never depends
    on which nodes have storage.
    """
    H = s.max_hops if H is None else H
    P = s.max_paths if P is None else P
    g = _Graph(s)
    pairs = storage_pairs(s) if allow_virtual else []
    phys_n = {n: tuple(_physical(g, n[0], n[1], H, P)) for n in pairs}
    storage: dict[StoragePair, tuple[RouteOption, ...]] = {}
    for n in pairs:
        virt = _virtual(g, n[0], n[1], H, P - len(phys_n[n]), phys_n, exclude=n)
        storage[n] = _options(phys_n[n], virt)
    user = []
    for src, dst in s.user_pairs:
        phys = _physical(g, src, dst, H, P - P // 2)
        virt = _virtual(g, src, dst, H, P - len(phys), phys_n) if pairs else []
        user.append(_options(tuple(phys), virt))
    return PathTable(tuple(user), storage)


def build_virtual_paths(s: Scenario, table: PathTable, H: int | None = None,
                        P: int | None = None) -> PathTable:
    """Add virtual paths to a table that holds physical paths only.

    User physical lists are trimmed to ``P - P // 2`` entries, the split used
    by :func:`build_path_table`.
    """
    H = s.max_hops if H is None else H
    P = s.max_paths if P is None else P
    g = _Graph(s)
    phys_n = {n: tuple(o.path for o in opts if not o.path.is_virtual) for n, opts in table.storage.items()}
    storage = {}
    for n, subs in phys_n.items():
        virt = _virtual(g, n[0], n[1], H, P - len(subs), phys_n, exclude=n)
        storage[n] = _options(subs, virt)
    user = []
    for (src, dst), opts in zip(s.user_pairs, table.user):
        phys = [o.path for o in opts if not o.path.is_virtual][: P - P // 2]
        virt = _virtual(g, src, dst, H, P - len(phys), phys_n) if phys_n else []
        user.append(_options(tuple(phys), virt))
    return PathTable(tuple(user), storage)


def physical_table(s: Scenario, H: int | None = None, P: int | None = None) -> PathTable:
    """Physical paths only: the input expected by :func:`build_virtual_paths`."""
    H = s.max_hops if H is None else H
    P = s.max_paths if P is None else P
    g = _Graph(s)
    storage = {n: _options(tuple(_physical(g, n[0], n[1], H, P)), []) for n in storage_pairs(s)}
    user = tuple(_options(tuple(_physical(g, a, b, H, P - P // 2)), []) for a, b in s.user_pairs)
    return PathTable(user, storage)


def _options(phys, virt) -> tuple[RouteOption, ...]:
    return tuple([RouteOption(f"H{i}", p) for i, p in enumerate(phys)]
                 + [RouteOption(f"U{i}", p) for i, p in enumerate(virt)])


def restrict(table: PathTable, keep) -> PathTable:
    """Table with only the options for which ``keep(owner, option)`` holds.

    Callers must keep the storage sub-path of every surviving virtual path.
    """
    user = tuple(tuple(o for o in opts if keep(k, o)) for k, opts in enumerate(table.user))
    storage = {n: tuple(o for o in opts if keep(n, o)) for n, opts in table.storage.items()}
    return replace(table, user=user, storage=storage)
