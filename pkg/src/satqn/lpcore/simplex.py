"""Bounded-variable revised primal simplex.

Every row gets a logical (slack) column so the working system is
``[A | I | D] v = b`` with box bounds on every column:

    <= row   slack in [0, inf)
    >= row   slack in (-inf, 0]
    =  row   slack fixed at 0

Phase 1 adds one artificial column for each row whose slack starts out of
bounds and maximizes minus their sum.  Phase 2 maximizes the real objective.
The basis inverse is kept as a sparse LU of the last refactorized basis plus
a product-form eta file.

Pricing is Dantzig (largest |d_j|, lowest index on ties); after a streak of
degenerate pivots the solver switches to Bland's rule until an improving
pivot happens, which guarantees termination.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

LE, EQ, GE = "<=", "=", ">="
_SENSES = {LE, EQ, GE}

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-10
REFACTOR_EVERY = 40
DEGENERATE_STREAK = 30


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class LpProblem:
    """``max/min c @ x`` subject to ``A @ x (sense) b`` and ``lb <= x <= ub``.

    ``A`` may be a dense array or any scipy sparse matrix.  Lower bounds may
    be ``-inf``; free columns are handled natively.
    """

    c: np.ndarray
    A: object
    senses: list[str]
    b: np.ndarray
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None
    maximize: bool = True
    row_names: list[str] | None = None
    col_names: list[str] | None = None

    def __post_init__(self) -> None:
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        if sp.issparse(self.A):
            self.A = sp.csr_matrix(self.A, dtype=float)
        else:
            arr = np.asarray(self.A, dtype=float)
            self.A = sp.csr_matrix(arr.reshape(-1, n) if arr.size else (0, n))
        m = self.A.shape[0]
        if self.A.shape[1] != n:
            raise ValueError(f"A has {self.A.shape[1]} columns, c has {n}")
        self.b = np.asarray(self.b, dtype=float).ravel()
        if self.b.size != m:
            raise ValueError(f"b has {self.b.size} entries, A has {m} rows")
        self.senses = list(self.senses)
        if len(self.senses) != m:
            raise ValueError("one sense per row required")
        bad = [s for s in self.senses if s not in _SENSES]
        if bad:
            raise ValueError(f"unknown row sense {bad[0]!r}")
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float).copy()
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).copy()
        if self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ValueError("bounds must have one entry per column")
        if np.any(self.lb > self.ub):
            j = int(np.argmax(self.lb > self.ub))
            raise ValueError(f"column {j}: lower bound {self.lb[j]} > upper bound {self.ub[j]}")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.b))):
            raise ValueError("objective and right-hand side must be finite")

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    def with_bounds(self, lb: np.ndarray, ub: np.ndarray) -> "LpProblem":
        return LpProblem(self.c, self.A, self.senses, self.b, lb, ub, self.maximize,
                         self.row_names, self.col_names)


@dataclass
class LpResult:
    """Outcome of :func:`solve_lp`.

    Sign convention for ``duals``: they are the derivative of the optimal
    objective with respect to each right-hand side.  For a maximization this
    makes duals of ``<=`` rows nonnegative and duals of ``>=`` rows
    nonpositive.  ``reduced_costs`` are ``c - A.T @ duals``.

    When infeasible, ``farkas`` holds multipliers ``y`` (``>= 0`` on ``<=``
    rows, ``<= 0`` on ``>=`` rows, free on ``=`` rows) such that the minimum
    of ``y @ A @ x`` over the variable box exceeds ``y @ b``; see
    :func:`check_farkas`.
    """

    status: LpStatus
    x: np.ndarray | None = None
    objective: float = float("nan")
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    farkas: np.ndarray | None = None
    iterations: int = 0
    message: str = ""
    row_names: list[str] | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _Numerical(Exception):
    pass


class _Basis:
    """LU of a base basis matrix plus product-form eta updates."""

    def __init__(self, cols: sp.csc_matrix, m: int):
        self.cols = cols
        self.m = m
        self.etas: list[tuple[int, np.ndarray]] = []
        self.lu = None

    def factor(self, basic: np.ndarray) -> None:
        self.etas = []
        if self.m == 0:
            self.lu = None
            return
        B = self.cols[:, basic].tocsc()
        try:
            self.lu = splu(B, permc_spec="COLAMD", diag_pivot_thresh=0.1,
                           options={"SymmetricMode": False})
        except RuntimeError as exc:  # exactly singular
            raise _Numerical(str(exc)) from exc

    def ftran(self, a: np.ndarray) -> np.ndarray:
        w = self.lu.solve(a) if self.m else a.copy()
        for r, alpha in self.etas:
            wr = w[r] / alpha[r]
            w -= alpha * wr
            w[r] = wr
        return w

    def btran(self, v: np.ndarray) -> np.ndarray:
        v = v.copy()
        for r, alpha in reversed(self.etas):
            vr = v[r] - (v @ alpha - v[r] * alpha[r])
            v[r] = vr / alpha[r]
        return self.lu.solve(v, trans="T") if self.m else v

    def update(self, r: int, alpha: np.ndarray) -> None:
        self.etas.append((r, alpha.copy()))


class _Simplex:
    def __init__(self, prob: LpProblem, max_iter: int | None):
        A = prob.A.tocsc()
        m, n = A.shape
        self.m, self.n = m, n
        self.prob = prob
        cost = prob.c if prob.maximize else -prob.c
        slack_lb = np.array([0.0 if s == LE else (-np.inf if s == GE else 0.0) for s in prob.senses])
        slack_ub = np.array([np.inf if s == LE else 0.0 for s in prob.senses])
        self.lb = np.concatenate([prob.lb, slack_lb])
        self.ub = np.concatenate([prob.ub, slack_ub])
        self.cost = np.concatenate([cost, np.zeros(m)])
        self.cols = sp.hstack([A, sp.identity(m, format="csc")], format="csc")
        self.b = prob.b
        self.n_art = 0
        self.max_iter = max_iter if max_iter is not None else 50 * (m + n) + 1000
        self.iterations = 0

    # -- setup ---------------------------------------------------------
    def _initial_point(self) -> None:
        m, n = self.m, self.n
        total = n + m
        x = np.zeros(total)
        for j in range(total):
            if np.isfinite(self.lb[j]):
                x[j] = self.lb[j]
            elif np.isfinite(self.ub[j]):
                x[j] = self.ub[j]
        x[n:] = 0.0
        resid = self.b - self.cols[:, :n] @ x[:n]
        art_rows, art_sign = [], []
        for i in range(m):
            k = n + i
            s = resid[i]
            if s < self.lb[k] - FEAS_TOL or s > self.ub[k] + FEAS_TOL:
                bound = self.lb[k] if s < self.lb[k] else self.ub[k]
                x[k] = bound
                art_rows.append(i)
                art_sign.append(1.0 if s - bound > 0 else -1.0)
            else:
                x[k] = s
        self.n_art = len(art_rows)
        if self.n_art:
            D = sp.csc_matrix((art_sign, (art_rows, np.arange(self.n_art))), shape=(m, self.n_art))
            self.cols = sp.hstack([self.cols, D], format="csc")
            self.lb = np.concatenate([self.lb, np.zeros(self.n_art)])
            self.ub = np.concatenate([self.ub, np.full(self.n_art, np.inf)])
            self.cost = np.concatenate([self.cost, np.zeros(self.n_art)])
            art_vals = np.abs(resid[art_rows] - x[n + np.array(art_rows)])
            x = np.concatenate([x, art_vals])
        self.x = x
        basic = np.arange(n, n + m)
        for a, i in enumerate(art_rows):
            basic[i] = n + m + a
        self.basic = basic
        self.is_basic = np.zeros(self.cols.shape[1], dtype=bool)
        self.is_basic[basic] = True
        self.basis = _Basis(self.cols, m)
        self.basis.factor(self.basic)

    def _column(self, q: int) -> np.ndarray:
        cols = self.cols
        lo, hi = cols.indptr[q], cols.indptr[q + 1]
        a = np.zeros(self.m)
        a[cols.indices[lo:hi]] = cols.data[lo:hi]
        return a

    # -- core loop -----------------------------------------------------
    def _refactor(self) -> None:
        self.basis.factor(self.basic)
        nonbasic = ~self.is_basic
        rhs = self.b - self.cols[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basic] = self.basis.ftran(rhs)

    def _run(self, cost: np.ndarray, allowed: np.ndarray) -> LpStatus:
        """Primal simplex on the current feasible basis with ``cost``."""
        degenerate = 0
        bland = False
        since_refactor = 0
        cols = self.cols
        colsT = cols.T.tocsr()
        while True:
            if self.iterations >= self.max_iter:
                return LpStatus.ITERATION_LIMIT
            y = self.basis.btran(cost[self.basic])
            d = cost - colsT @ y
            d[self.is_basic] = 0.0
            x = self.x
            can_up = (x < self.ub - FEAS_TOL) & allowed
            can_down = (x > self.lb + FEAS_TOL) & allowed
            score = np.where((d > OPT_TOL) & can_up, d, 0.0)
            score = np.maximum(score, np.where((d < -OPT_TOL) & can_down, -d, 0.0))
            score[self.is_basic] = 0.0
            cand = np.flatnonzero(score > 0)
            if cand.size == 0:
                return LpStatus.OPTIMAL
            if bland:
                q = int(cand[0])
            else:
                q = int(cand[np.argmax(score[cand])])
            direction = 1.0 if d[q] > 0 else -1.0
            a_q = self._column(q)
            alpha = self.basis.ftran(a_q)
            step, r = self._ratio(alpha, direction, q, bland)
            if step is None:
                self.ray = (q, direction, alpha)
                return LpStatus.UNBOUNDED
            self.iterations += 1
            if step <= FEAS_TOL:
                degenerate += 1
                if degenerate > DEGENERATE_STREAK:
                    bland = True
            else:
                degenerate = 0
                bland = False
            self.x[self.basic] -= direction * step * alpha
            self.x[q] += direction * step
            if r is None:  # bound flip
                continue
            leaving = self.basic[r]
            # snap leaving variable onto the bound it hit
            if direction * alpha[r] > 0:
                self.x[leaving] = self.lb[leaving]
            else:
                self.x[leaving] = self.ub[leaving]
            self.basic[r] = q
            self.is_basic[leaving] = False
            self.is_basic[q] = True
            since_refactor += 1
            if since_refactor >= REFACTOR_EVERY:
                self._refactor()
                since_refactor = 0
            else:
                self.basis.update(r, alpha)

    def _ratio(self, alpha: np.ndarray, direction: float, q: int, bland: bool):
        """Two-pass Harris ratio test. Returns (step, leaving row) or (None, None)."""
        delta = -direction * alpha  # change of basic values per unit step
        xb = self.x[self.basic]
        lbb = self.lb[self.basic]
        ubb = self.ub[self.basic]
        big = np.abs(delta) > PIVOT_TOL
        dec = big & (delta < 0) & np.isfinite(lbb)
        inc = big & (delta > 0) & np.isfinite(ubb)
        own = self.ub[q] - self.lb[q]
        if not (dec.any() or inc.any()):
            if np.isfinite(own):
                return own, None
            return None, None
        relaxed = np.full(self.m, np.inf)
        relaxed[dec] = (xb[dec] - lbb[dec] + FEAS_TOL) / -delta[dec]
        relaxed[inc] = (ubb[inc] - xb[inc] + FEAS_TOL) / delta[inc]
        theta_max = relaxed.min()
        if np.isfinite(own) and own <= theta_max:
            return own, None
        exact = np.full(self.m, np.inf)
        exact[dec] = (xb[dec] - lbb[dec]) / -delta[dec]
        exact[inc] = (ubb[inc] - xb[inc]) / delta[inc]
        exact = np.maximum(exact, 0.0)
        ties = np.flatnonzero(exact <= theta_max)
        if bland:
            r = int(ties[np.argmin(self.basic[ties])])
        else:
            mags = np.abs(alpha[ties])
            r = int(ties[np.argmax(mags)])
        return float(exact[r]), r

    def _drive_out_artificials(self) -> None:
        first_art = self.n + self.m
        for r in range(self.m):
            j = self.basic[r]
            if j < first_art:
                continue
            e = np.zeros(self.m)
            e[r] = 1.0
            row = self.basis.btran(e) @ self.cols[:, :first_art]
            row = np.asarray(row).ravel()
            cand = np.flatnonzero((np.abs(row) > 1e-7) & ~self.is_basic[:first_art]
                                  & (self.ub[:first_art] > self.lb[:first_art]))
            if cand.size == 0:
                continue  # redundant row; artificial stays basic at zero
            q = int(cand[np.argmax(np.abs(row[cand]))])
            alpha = self.basis.ftran(self._column(q))
            self.basic[r] = q
            self.is_basic[j] = False
            self.is_basic[q] = True
            self.x[j] = 0.0
            self.basis.update(r, alpha)
        self._refactor()

    def solve(self) -> LpResult:
        try:
            return self._solve()
        except _Numerical as exc:
            return LpResult(LpStatus.NUMERICAL_FAILURE, iterations=self.iterations,
                            message=f"singular basis: {exc}")

    def _solve(self) -> LpResult:
        self._initial_point()
        total = self.cols.shape[1]
        first_art = self.n + self.m
        free = self.ub > self.lb
        if self.n_art:
            c1 = np.zeros(total)
            c1[first_art:] = -1.0
            status = self._run(c1, free)
            if status is LpStatus.ITERATION_LIMIT:
                return LpResult(status, iterations=self.iterations, message="phase 1 iteration cap")
            self._refactor()
            infeas = float(self.x[first_art:].sum())
            scale = max(1.0, float(np.abs(self.b).max(initial=0.0)))
            if infeas > 1e-8 * scale:
                y = self.basis.btran(c1[self.basic])
                return LpResult(LpStatus.INFEASIBLE, iterations=self.iterations,
                                farkas=self._orient_duals(y, phase1=True),
                                message=f"sum of infeasibilities {infeas:.3e}")
            self.x[first_art:] = 0.0
            self.ub[first_art:] = 0.0
            self._drive_out_artificials()
            free = self.ub > self.lb
        free = free.copy()
        free[first_art:] = False
        status = self._run(self.cost, free)
        if status is not LpStatus.OPTIMAL:
            return LpResult(status, iterations=self.iterations,
                            message="objective unbounded" if status is LpStatus.UNBOUNDED else "")
        self._refactor()
        y = self.basis.btran(self.cost[self.basic])
        x = self.x[: self.n].copy()
        duals = self._orient_duals(y, phase1=False)
        red = self.prob.c - self.prob.A.T @ duals
        return LpResult(LpStatus.OPTIMAL, x=x, objective=float(self.prob.c @ x), duals=duals,
                        reduced_costs=np.asarray(red).ravel(), iterations=self.iterations,
                        row_names=self.prob.row_names)

    def _orient_duals(self, y: np.ndarray, phase1: bool) -> np.ndarray:
        if phase1 or self.prob.maximize:
            return np.asarray(y, dtype=float).copy()
        return -np.asarray(y, dtype=float)


def solve_lp(problem: LpProblem, max_iter: int | None = None) -> LpResult:
    """Solve ``problem`` with the two-phase bounded primal simplex."""
    return _Simplex(problem, max_iter).solve()


def check_farkas(problem: LpProblem, ray: np.ndarray, tol: float = 1e-7) -> bool:
    """True if ``ray`` certifies that ``problem`` has no feasible point.

    Any feasible ``x`` satisfies ``ray @ A @ x <= ray @ b`` given the sign
    pattern on ``ray``; the certificate holds when the box minimum of the
    left side is strictly above ``ray @ b``.
    """
    ray = np.asarray(ray, dtype=float)
    for s, v in zip(problem.senses, ray):
        if s == LE and v < -tol or s == GE and v > tol:
            return False
    coef = np.asarray(problem.A.T @ ray).ravel()
    lo_sum = 0.0
    for j, a in enumerate(coef):
        if abs(a) <= tol:
            continue
        bound = problem.lb[j] if a > 0 else problem.ub[j]
        if not np.isfinite(bound):
            return False
        lo_sum += a * bound
    gap = lo_sum - float(ray @ problem.b)
    scale = max(1.0, float(np.abs(ray).max(initial=0.0)))
    return gap > tol * scale


def slacks(problem: LpProblem, x: np.ndarray) -> np.ndarray:
    """Nonnegative slack per row: ``b - Ax`` for <=, ``Ax - b`` for >=, ``0`` for =."""
    ax = np.asarray(problem.A @ x).ravel()
    out = np.zeros(problem.shape[0])
    for i, s in enumerate(problem.senses):
        if s == LE:
            out[i] = problem.b[i] - ax[i]
        elif s == GE:
            out[i] = ax[i] - problem.b[i]
    return out


def dual_objective(problem: LpProblem, result: LpResult) -> float:
    """``b @ y`` plus the bound terms contributed by reduced costs."""
    val = float(problem.b @ result.duals)
    for j, dj in enumerate(result.reduced_costs):
        if abs(dj) <= 1e-12:
            continue
        # maximization: positive reduced cost sits at the upper bound
        at_upper = dj > 0 if problem.maximize else dj < 0
        bound = problem.ub[j] if at_upper else problem.lb[j]
        if np.isfinite(bound):
            val += dj * bound
    return val


def duals_for_rows(result: LpResult, row_tags=None) -> dict:
    """Map row tags (or ``result.row_names``) to their dual values."""
    if result.status is not LpStatus.OPTIMAL:
        raise ValueError(f"duals requested from a {result.status.value} LP")
    tags = row_tags if row_tags is not None else result.row_names
    if tags is None:
        tags = list(range(len(result.duals)))
    if len(tags) != len(result.duals):
        raise ValueError("row tag count does not match dual count")
    return {tag: float(v) for tag, v in zip(tags, result.duals)}
