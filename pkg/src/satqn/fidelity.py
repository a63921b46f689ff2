"""Werner-state fidelity along a path and recurrence purification cost.

Swapping multiplies Werner parameters ``w = (4F - 1) / 3``.  Purification
uses the symmetric two-to-one recurrence

    F' = F^2 / (F^2 + (1 - F)^2),   success probability F^2 + (1 - F)^2,

and a round that needs two inputs and succeeds with probability ``p``
consumes ``2 / p`` of its inputs per output on average.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Iterable

from .pathing import PathTable, RouteOption
from .topology import Scenario

log = logging.getLogger(__name__)

MAX_ROUNDS = 30


class FidelityDomainError(ValueError):
    """A fidelity at or below 1/2 (not purifiable)."""


class UnreachableTargetError(ValueError):
    """The purification target is not met within the round cap."""


@dataclass(frozen=True)
class PurificationCost:
    value: float
    rounds: int
    output_fidelity: float


def _check(F: float, what: str) -> None:
    if not (0.5 < F <= 1.0):
        raise FidelityDomainError(f"{what} {F!r} outside (0.5, 1]")


def werner(F: float) -> float:
    return (4.0 * F - 1.0) / 3.0


def path_fidelity(link_fidelities: Iterable[float]) -> float:
    fs = list(link_fidelities)
    if not fs:
        raise ValueError("a path needs at least one link")
    prod = 1.0
    for F in fs:
        _check(F, "link fidelity")
        prod *= werner(F)
    return (1.0 + 3.0 * prod) / 4.0


def purify_once(F: float) -> tuple[float, float]:
    """One recurrence round: (output fidelity, success probability)."""
    p = F * F + (1.0 - F) ** 2
    return F * F / p, p


def purification_cost(F_p: float, F_th: float, max_rounds: int = MAX_ROUNDS) -> PurificationCost:
    """Expected base pairs per delivered pair of fidelity at least ``F_th``."""
    _check(F_p, "path fidelity")
    _check(F_th, "target fidelity")
    F, cost, r = F_p, 1.0, 0
    while F < F_th:
        if r >= max_rounds:
            raise UnreachableTargetError(
                f"fidelity {F_p} does not reach {F_th} within {max_rounds} rounds")
        F, p = purify_once(F)
        cost *= 2.0 / p
        r += 1
    return PurificationCost(cost, r, F)


def annotate_costs(table: PathTable, s: Scenario,
                   diagnostics: list[str] | None = None) -> PathTable:
    """Fill ``fidelity``, ``cost`` and ``rounds`` on every table entry.

    Entries whose fidelity is out of domain or whose target is unreachable
    are dropped.  A message for each is logged and appended to
    ``diagnostics`` when given.  Virtual paths whose storage sub-path was
    dropped are removed as well.
    """
    fid = {l.key: l.fidelity for l in s.links}

    def annotate(o: RouteOption, target: float, owner) -> RouteOption | None:
        try:
            F = path_fidelity(fid[e] for e in o.path.edges)
            g = purification_cost(F, target)
        except (FidelityDomainError, UnreachableTargetError) as exc:
            msg = f"dropping path {o.pid} of {owner} ({o.path.label()}): {exc}"
            log.warning(msg)
            if diagnostics is not None:
                diagnostics.append(msg)
            return None
        return replace(o, fidelity=F, cost=g.value, rounds=g.rounds)

    store_th = s.store_threshold
    storage = {}
    for n, opts in table.storage.items():
        storage[n] = tuple(a for a in (annotate(o, store_th, n) for o in opts) if a is not None)
    kept_subs = {(n, o.path) for n, opts in storage.items() for o in opts if not o.path.is_virtual}

    def sub_ok(o: RouteOption, owner) -> bool:
        if not o.path.is_virtual or (o.path.pair, o.path.sub) in kept_subs:
            return True
        msg = f"dropping path {o.pid} of {owner}: its storage sub-path was dropped"
        log.warning(msg)
        if diagnostics is not None:
            diagnostics.append(msg)
        return False

    storage = {n: tuple(o for o in opts if sub_ok(o, n)) for n, opts in storage.items()}
    user = []
    for k, opts in enumerate(table.user):
        th = s.fidelity_thresholds[k]
        done = [annotate(o, th, f"user pair {k}") for o in opts if sub_ok(o, f"user pair {k}")]
        user.append(tuple(a for a in done if a is not None))
    return PathTable(tuple(user), storage)

