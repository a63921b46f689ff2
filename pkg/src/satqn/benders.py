"""Benders decomposition over the path-selection binaries.

The master chooses ``x`` and a value surrogate ``theta``; the subproblem fixes
``x`` and optimizes rates and stocks.  With ``x`` fixed every C1 row is a
simple upper bound ``y <= Ymax * x``, so the subproblem carries those as
column bounds.  C1 duals are then recovered from reduced costs, which always
yields a valid dual point that is tight at the generating ``x``.

Bounds follow the usual maximization convention: the master optimum is an
upper bound, the best subproblem value found so far is the lower bound.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .lpcore import LE, LpProblem, LpStatus, solve_bnb, solve_lp
from .lpcore.simplex import check_farkas
from .model import MilpInstance, RoutingSolution, decode, first_path_assignment

log = logging.getLogger(__name__)


class SubproblemInfeasible(RuntimeError):
    """The rate subproblem has no feasible point (should never happen)."""


class MasterInfeasible(RuntimeError):
    pass


@dataclass(frozen=True)
class Cut:
    """``theta_coef * theta + coef @ x <= rhs`` over the binary columns."""

    kind: str
    coef: np.ndarray
    theta_coef: float
    rhs: float

    def bound_at(self, x_bin: np.ndarray) -> float:
        """Largest theta allowed at ``x_bin`` (optimality cuts only)."""
        return float(self.rhs - self.coef @ x_bin)

    def violation(self, x_bin: np.ndarray, theta: float) -> float:
        return float(self.theta_coef * theta + self.coef @ x_bin - self.rhs)


@dataclass
class Subsolution:
    value: float
    vector: np.ndarray
    duals: np.ndarray
    iterations: int


class Decomposition:
    """Static split of a model into binary and continuous parts."""

    def __init__(self, inst: MilpInstance):
        self.inst = inst
        fam = np.array([r.family for r in inst.row_tags])
        self.bin_cols = inst.binary_cols
        self.cont_cols = np.flatnonzero(~inst.integer)
        self.c1_rows = np.flatnonzero(fam == "C1")
        self.c2_rows = np.flatnonzero(fam == "C2")
        self.sub_rows = np.flatnonzero((fam != "C1") & (fam != "C2"))
        A = inst.A.tocsc()
        self.A_bin = A[:, self.bin_cols].tocsr()
        self.A_cont = A[:, self.cont_cols].tocsr()
        pos = {int(j): i for i, j in enumerate(self.cont_cols)}
        bpos = {int(j): i for i, j in enumerate(self.bin_cols)}
        # each C1 row: (row, continuous position of y, binary position of x, Ymax)
        c1 = []
        Acsr = inst.A.tocsr()
        for r in self.c1_rows:
            lo, hi = Acsr.indptr[r], Acsr.indptr[r + 1]
            ycol = xcol = None
            ymax = 0.0
            for j, a in zip(Acsr.indices[lo:hi], Acsr.data[lo:hi]):
                if inst.integer[j]:
                    xcol, ymax = bpos[int(j)], -a
                else:
                    ycol = pos[int(j)]
            c1.append((int(r), ycol, xcol, float(ymax)))
        self.c1 = c1
        self.c1_y = np.array([y for _, y, _, _ in c1], dtype=int)
        self.c1_x = np.array([x for _, _, x, _ in c1], dtype=int)
        self.c1_ymax = np.array([m for _, _, _, m in c1])
        self.sub_A = self.A_cont[self.sub_rows]
        self.sub_A_bin = self.A_bin[self.sub_rows]
        self.sub_senses = [inst.senses[i] for i in self.sub_rows]
        self.sub_c = inst.c[self.cont_cols]
        self.lb = inst.lb[self.cont_cols]
        self.ub = inst.ub[self.cont_cols]
        self.names = [inst.row_tags[i].name for i in self.sub_rows]
        self.theta_cap = self._theta_cap()

    def _theta_cap(self) -> float:
        s = self.inst.scenario
        cap = 0.0
        for (k, t), cols in self.inst.groups.items():
            best = max((self.inst.ymax.get((k, self.inst.index.tags[j].pid, t), 0.0) for j in cols), default=0.0)
            cap += s.weights[k][t - 1] * best
        return float(cap)

    def binary_part(self, vec: np.ndarray) -> np.ndarray:
        return np.asarray(vec)[self.bin_cols]

    def full_vector(self, x_bin: np.ndarray, cont: np.ndarray) -> np.ndarray:
        vec = np.zeros(self.inst.n_cols)
        vec[self.bin_cols] = x_bin
        vec[self.cont_cols] = cont
        return vec

    def sub_problem(self, x_bin: np.ndarray) -> LpProblem:
        ub = self.ub.copy()
        ub[self.c1_y] = np.minimum(ub[self.c1_y], self.c1_ymax * x_bin[self.c1_x])
        b = self.inst.b[self.sub_rows] - self.sub_A_bin @ x_bin
        return LpProblem(self.sub_c, self.sub_A, self.sub_senses, b, self.lb, ub, True, self.names)

    def sub_problem_rows(self, x_bin: np.ndarray) -> LpProblem:
        """Subproblem keeping C1 as explicit rows (used for feasibility certificates)."""
        rows = np.concatenate([self.c1_rows, self.sub_rows])
        A = self.A_cont[rows]
        b = self.inst.b[rows] - self.A_bin[rows] @ x_bin
        senses = [self.inst.senses[i] for i in rows]
        return LpProblem(self.sub_c, A, senses, b, self.lb, self.ub, True)


def _as_dec(obj) -> Decomposition:
    if isinstance(obj, Decomposition):
        return obj
    cached = getattr(obj, "_decomposition", None)
    if cached is None:
        cached = Decomposition(obj)
        obj._decomposition = cached
    return cached


def solve_subproblem(dec: Decomposition | MilpInstance, x_bin: np.ndarray) -> Subsolution:
    """Optimal rates and stocks for fixed binaries, with a full-length row dual vector.

    ``x_bin`` lists binary values in model column order.
    """
    dec = _as_dec(dec)
    x_bin = np.asarray(x_bin, dtype=float)
    prob = dec.sub_problem(x_bin)
    res = solve_lp(prob)
    if res.status is LpStatus.INFEASIBLE:
        raise SubproblemInfeasible(_infeasible_message(dec, x_bin))
    if res.status is not LpStatus.OPTIMAL:
        raise RuntimeError(f"subproblem solve ended with status {res.status.value}: {res.message}")
    duals = np.zeros(dec.inst.n_rows)
    duals[dec.sub_rows] = res.duals
    # C1 rows carry coefficient +1 on their y column
    duals[dec.c1_rows] = np.maximum(res.reduced_costs[dec.c1_y], 0.0)
    return Subsolution(res.objective, dec.full_vector(x_bin, res.x), duals, res.iterations)


def _infeasible_message(dec: Decomposition, x_bin: np.ndarray) -> str:
    prob = dec.sub_problem_rows(x_bin)
    res = solve_lp(prob)
    rows = np.concatenate([dec.c1_rows, dec.sub_rows])
    if res.farkas is None:
        return "rate subproblem infeasible"
    named = [dec.inst.row_tags[rows[i]].name for i in np.flatnonzero(np.abs(res.farkas) > 1e-9)]
    return "rate subproblem infeasible; certificate rows: " + ", ".join(named[:20])


def make_optimality_cut(dec: Decomposition | MilpInstance, duals: np.ndarray) -> Cut:
    """``theta <= u @ (b - A_x x)`` over every row except C2."""
    dec = _as_dec(dec)
    if duals is None or len(duals) != dec.inst.n_rows:
        raise ValueError("a dual value for every model row is required")
    u = np.asarray(duals, dtype=float).copy()
    u[dec.c2_rows] = 0.0
    const = float(u @ dec.inst.b)
    pi = -(dec.A_bin.T @ u)
    return Cut("optimality", -np.asarray(pi).ravel(), 1.0, const)


def make_feasibility_cut(dec: Decomposition | MilpInstance, x_bin: np.ndarray) -> Cut:
    """Cut removing ``x_bin`` from a solve whose rate subproblem is infeasible.

    Uses the Farkas multipliers ``r`` of the subproblem with C1 as rows:
    every feasible ``x`` must satisfy ``r @ (b - A_x x) >= min_box r @ A_cont v``.
    """
    dec = _as_dec(dec)
    prob = dec.sub_problem_rows(np.asarray(x_bin, dtype=float))
    res = solve_lp(prob)
    if res.status is not LpStatus.INFEASIBLE or res.farkas is None:
        raise ValueError("subproblem is feasible at this x; no feasibility cut exists")
    if not check_farkas(prob, res.farkas):
        raise RuntimeError("subproblem certificate failed verification")
    rows = np.concatenate([dec.c1_rows, dec.sub_rows])
    r = np.zeros(dec.inst.n_rows)
    r[rows] = res.farkas
    g = np.asarray(dec.A_cont.T @ r).ravel()
    pos, neg = g > 0, g < 0
    low = float(g[pos] @ dec.lb[pos] + g[neg] @ dec.ub[neg])
    coef = np.asarray(dec.A_bin.T @ r).ravel()
    return Cut("feasibility", coef, 0.0, float(r @ dec.inst.b) - low)


@dataclass
class MasterState:
    cuts: list[Cut] = field(default_factory=list)
    x: np.ndarray | None = None
    theta: float = float("inf")
    bound: float = float("inf")
    incumbent: float = -float("inf")
    incumbent_vector: np.ndarray | None = None
    iteration: int = 0
    bound_history: list[float] = field(default_factory=list)
    incumbent_history: list[float] = field(default_factory=list)


def solve_master(dec: Decomposition | MilpInstance, state: MasterState, gap_tol: float = 1e-6,
                 node_limit: int = 200_000) -> tuple[np.ndarray, float]:
    """Best binaries under the accumulated cuts; returns (x, proven upper bound)."""
    dec = _as_dec(dec)
    nb = dec.bin_cols.size
    C2 = dec.A_bin[dec.c2_rows]
    blocks = [sp.hstack([C2, sp.csr_matrix((C2.shape[0], 1))])]
    senses = ["="] * C2.shape[0]
    rhs = list(dec.inst.b[dec.c2_rows])
    if state.cuts:
        coef = np.array([np.append(c.coef, c.theta_coef) for c in state.cuts])
        blocks.append(sp.csr_matrix(coef))
        senses += [LE] * len(state.cuts)
        rhs += [c.rhs for c in state.cuts]
    A = sp.vstack(blocks, format="csr")
    c = np.zeros(nb + 1)
    c[-1] = 1.0
    lb = np.zeros(nb + 1)
    ub = np.ones(nb + 1)
    ub[-1] = dec.theta_cap
    prob = LpProblem(c, A, senses, np.array(rhs), lb, ub, True)
    res = solve_bnb(prob, range(nb), gap_tol=gap_tol, node_limit=node_limit)
    if res.x is None:
        raise MasterInfeasible(f"master problem ended with status {res.status.value}")
    x = np.round(res.x[:nb])
    return x, float(res.bound)


def run(inst: MilpInstance, gap_tol: float = 1e-6, max_iters: int = 500,
        scheme: str = "ps-egr", time_limit: float | None = None) -> RoutingSolution:
    """Benders loop; returns the best plan found, validated against every row."""
    start = time.perf_counter()
    dec = Decomposition(inst)
    state = MasterState()
    x = dec.binary_part(first_path_assignment(inst))
    seen: set[bytes] = set()
    rows_log: list[dict] = []
    status = "not_converged"
    gap = float("inf")
    while True:
        state.iteration += 1
        t0 = time.perf_counter()
        sub = solve_subproblem(dec, x)
        t_sub = time.perf_counter() - t0
        seen.add(x.astype(np.int8).tobytes())
        if sub.value > state.incumbent:
            state.incumbent = sub.value
            state.incumbent_vector = sub.vector
        cut = make_optimality_cut(dec, sub.duals)
        state.cuts.append(cut)
        t0 = time.perf_counter()
        x_new, bound = solve_master(dec, state, gap_tol=0.5 * gap_tol)
        t_master = time.perf_counter() - t0
        state.bound = min(state.bound, bound)
        state.bound_history.append(state.bound)
        state.incumbent_history.append(state.incumbent)
        gap = (state.bound - state.incumbent) / max(1.0, abs(state.incumbent))
        rows_log.append({
            "iteration": state.iteration, "master_bound": state.bound,
            "incumbent": state.incumbent, "gap": max(gap, 0.0),
            "subproblem_time": t_sub, "master_time": t_master,
            "cuts": len(state.cuts), "subproblem_value": sub.value,
        })
        log.debug("iter %d bound %.6f incumbent %.6f gap %.3e", state.iteration,
                  state.bound, state.incumbent, gap)
        if gap <= gap_tol:
            status = "optimal"
            break
        key = x_new.astype(np.int8).tobytes()
        if key in seen:
            # a repeated master choice cannot improve the incumbent further
            status = "optimal" if gap <= gap_tol else "stalled"
            break
        if state.iteration >= max_iters:
            break
        if time_limit is not None and time.perf_counter() - start > time_limit:
            break
        x = x_new
    sol = decode(inst, state.incumbent_vector, scheme, status, bound=state.bound,
                 gap=max(gap, 0.0), iterations=state.iteration,
                 wall_time=time.perf_counter() - start, log=rows_log)
    sol.extra["cuts"] = state.cuts
    sol.extra["state"] = state
    return sol


def solve_monolithic(inst: MilpInstance, gap_tol: float = 1e-9, node_limit: int = 200_000,
                     scheme: str = "monolithic") -> RoutingSolution:
    """Branch and bound on the whole model (reference solver for small cases)."""
    start = time.perf_counter()
    res = solve_bnb(inst.to_lp(), inst.binary_cols, gap_tol=gap_tol, node_limit=node_limit)
    if res.x is None:
        raise RuntimeError(f"monolithic solve ended with status {res.status.value}")
    status = "optimal" if res.optimal else res.status.value
    return decode(inst, res.x, scheme, status, bound=res.bound, gap=res.gap,
                  iterations=res.nodes, wall_time=time.perf_counter() - start)


def fixed_assignment_value(inst: MilpInstance, x_full: np.ndarray) -> RoutingSolution:
    """Optimize rates and stocks for a given binary assignment (one LP)."""
    start = time.perf_counter()
    dec = Decomposition(inst)
    sub = solve_subproblem(dec, dec.binary_part(x_full))
    return decode(inst, sub.vector, "fixed", "optimal", bound=sub.value,
                  wall_time=time.perf_counter() - start)
