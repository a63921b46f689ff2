"""Best-first branch and bound for LPs with binary columns."""

from __future__ import annotations

import enum
import heapq
import itertools
from dataclasses import dataclass

import numpy as np

from .simplex import LpProblem, LpStatus, solve_lp

INT_TOL = 1e-6


class BnbStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NODE_LIMIT = "node_limit"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class BnbResult:
    status: BnbStatus
    x: np.ndarray | None
    objective: float
    bound: float
    nodes: int
    gap: float
    lp_iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is BnbStatus.OPTIMAL


def relative_gap(incumbent: float, bound: float) -> float:
    if not np.isfinite(incumbent) or not np.isfinite(bound):
        return float("inf")
    return abs(bound - incumbent) / max(1.0, abs(incumbent))


def _is_integral(x: np.ndarray, binary: np.ndarray) -> bool:
    v = x[binary]
    return bool(np.all(np.abs(v - np.round(v)) <= INT_TOL))


def solve_bnb(problem: LpProblem, binary, gap_tol: float = 1e-6,
              node_limit: int = 100_000) -> BnbResult:
    """Maximize (or minimize) ``problem`` with the listed columns restricted to {0, 1}.

    Nodes are explored best bound first; the branching column is the most
    fractional binary, lowest index on ties.  Integral relaxations are
    polished by fixing the rounded binaries and re-solving, so incumbents are
    exactly binary and feasible to LP tolerance.
    """
    binary = np.asarray(sorted(set(int(j) for j in binary)), dtype=int)
    sign = 1.0 if problem.maximize else -1.0
    lb0, ub0 = problem.lb.copy(), problem.ub.copy()
    if binary.size:
        if np.any(lb0[binary] < 0) or np.any(ub0[binary] > 1):
            raise ValueError("binary columns must have bounds within [0, 1]")

    best_x: np.ndarray | None = None
    best_val = -np.inf  # in maximization sense
    lp_iters = 0
    counter = itertools.count()
    heap: list = []
    nodes = 0

    def relax(lb, ub):
        nonlocal lp_iters
        res = solve_lp(problem.with_bounds(lb, ub))
        lp_iters += res.iterations
        return res

    root = relax(lb0, ub0)
    nodes += 1
    if root.status is LpStatus.INFEASIBLE:
        return BnbResult(BnbStatus.INFEASIBLE, None, float("nan"), float("nan"), nodes, float("inf"), lp_iters)
    if root.status is LpStatus.UNBOUNDED:
        return BnbResult(BnbStatus.UNBOUNDED, None, float("nan"), float("nan"), nodes, float("inf"), lp_iters)
    if root.status is not LpStatus.OPTIMAL:
        return BnbResult(BnbStatus.NUMERICAL_FAILURE, None, float("nan"), float("nan"), nodes, float("inf"), lp_iters)
    heapq.heappush(heap, (-sign * root.objective, next(counter), lb0, ub0, root))

    def polish(lb, ub, x):
        nonlocal best_x, best_val
        lb, ub = lb.copy(), ub.copy()
        rounded = np.round(x[binary])
        lb[binary] = rounded
        ub[binary] = rounded
        res = relax(lb, ub)
        if res.status is LpStatus.OPTIMAL and sign * res.objective > best_val:
            xs = res.x.copy()
            xs[binary] = rounded
            best_val = sign * res.objective
            best_x = xs

    status = BnbStatus.OPTIMAL
    while heap:
        neg_bound, _, lb, ub, res = heap[0]
        top = -neg_bound
        if best_x is not None and (top - best_val) / max(1.0, abs(best_val)) <= gap_tol:
            break
        heapq.heappop(heap)
        if best_x is not None and top <= best_val:
            continue
        x = res.x
        if _is_integral(x, binary):
            polish(lb, ub, x)
            continue
        if nodes >= node_limit:
            heapq.heappush(heap, (neg_bound, next(counter), lb, ub, res))
            status = BnbStatus.NODE_LIMIT
            break
        frac = np.abs(x[binary] - np.round(x[binary]))
        dist = np.abs(x[binary] - 0.5)
        dist[frac <= INT_TOL] = np.inf
        j = int(binary[int(np.argmin(dist))])
        for val in (1.0, 0.0):
            clb, cub = lb.copy(), ub.copy()
            clb[j] = cub[j] = val
            child = relax(clb, cub)
            nodes += 1
            if child.status is LpStatus.OPTIMAL:
                cval = sign * child.objective
                if best_x is None or cval > best_val:
                    heapq.heappush(heap, (-cval, next(counter), clb, cub, child))
            elif child.status not in (LpStatus.INFEASIBLE,):
                return BnbResult(BnbStatus.NUMERICAL_FAILURE, best_x,
                                 sign * best_val if best_x is not None else float("nan"),
                                 float("nan"), nodes, float("inf"), lp_iters)

    if best_x is None:
        if status is BnbStatus.NODE_LIMIT:
            bound = -heap[0][0] if heap else float("nan")
            return BnbResult(status, None, float("nan"), sign * bound, nodes, float("inf"), lp_iters)
        return BnbResult(BnbStatus.INFEASIBLE, None, float("nan"), float("nan"), nodes, float("inf"), lp_iters)
    bound = max(best_val, max((-h[0] for h in heap), default=best_val))
    gap = relative_gap(best_val, bound)
    return BnbResult(status, best_x, sign * best_val, sign * bound, nodes, gap, lp_iters)
