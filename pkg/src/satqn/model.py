"""Mixed-binary model of joint path selection and entanglement generation rates.

Columns
    x[k, p, t]  binary, user pair ``k`` routes over path ``p`` in slot ``t``
    y[o, p, t]  generation rate (pairs/s) of owner ``o`` (user pair or storage pair)
    z[n, p, t]  stock held by storage pair ``n`` on path ``p`` at the start of ``t``

Row families
    C1  y[k,p,t] - Ymax[k,p,t] x[k,p,t] <= 0
    C2  sum_p x[k,p,t] = 1
    C3  sum of z over storage pairs holding node m <= B_m
    C4  sum of g * y over paths loading edge e <= C_e(t)
    C5  stored pairs drawn in slot t <= z[n,p,t]
    C6  z[n,p,t] + drawn(t-1) = z[n,p,t-1] + delta * y[n,p,t-1];  z[n,p,1] = initial stock

A user pair with no usable path in some slot gets a ``null`` option: an x
column with no rate, so C2 stays satisfiable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .lpcore import EQ, LE, LpProblem
from .pathing import PathTable, RouteOption
from .topology import Scenario, snapshot

NULL = "null"
FAMILIES = ("C1", "C2", "C3", "C4", "C5", "C6")


class ModelBuildError(ValueError):
    pass


@dataclass(frozen=True)
class ColumnTag:
    var: str
    owner: object
    pid: str
    t: int

    @property
    def name(self) -> str:
        return f"{self.var}_{_owner_name(self.owner)}_{self.pid}_t{self.t}"


@dataclass(frozen=True)
class RowTag:
    family: str
    index: tuple

    @property
    def name(self) -> str:
        parts = [_owner_name(v) if isinstance(v, tuple) else str(v) for v in self.index]
        return "_".join([self.family] + parts)


def _owner_name(owner) -> str:
    if isinstance(owner, tuple):
        return "n" + "~".join(owner)
    if isinstance(owner, (int, np.integer)):
        return f"k{owner}"
    return str(owner)


@dataclass
class VariableIndex:
    x: dict[tuple, int] = field(default_factory=dict)
    y: dict[tuple, int] = field(default_factory=dict)
    z: dict[tuple, int] = field(default_factory=dict)
    tags: list[ColumnTag] = field(default_factory=list)

    def add(self, var: str, owner, pid: str, t: int) -> int:
        col = len(self.tags)
        self.tags.append(ColumnTag(var, owner, pid, t))
        getattr(self, var)[(owner, pid, t)] = col
        return col

    def __len__(self) -> int:
        return len(self.tags)


@dataclass
class MilpInstance:
    scenario: Scenario
    table: PathTable
    index: VariableIndex
    c: np.ndarray
    A: sp.csr_matrix
    senses: list[str]
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    row_tags: list[RowTag]
    ymax: dict[tuple, float]
    groups: dict[tuple[int, int], list[int]]

    @property
    def n_cols(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return len(self.row_tags)

    @property
    def binary_cols(self) -> np.ndarray:
        return np.flatnonzero(self.integer)

    def rows_of(self, family: str) -> np.ndarray:
        return np.array([i for i, r in enumerate(self.row_tags) if r.family == family], dtype=int)

    def to_lp(self) -> LpProblem:
        return LpProblem(self.c, self.A, self.senses, self.b, self.lb, self.ub, True,
                         [r.name for r in self.row_tags], [t.name for t in self.index.tags])

    def objective(self, vec: np.ndarray) -> float:
        return float(self.c @ vec)


def path_capacity(k, option: RouteOption, t: int, s: Scenario, cap_at=None) -> float:
    """Largest rate the path can carry alone in slot ``t`` without breaking C4 or C5."""
    path = option.path
    if not path.valid_at(t):
        raise ValueError(f"path {option.pid} of {_owner_name(k)} is not usable in slot {t}")
    if option.cost is None:
        raise ModelBuildError(f"path {option.pid} of {_owner_name(k)} has no purification cost")
    g = option.cost
    if cap_at is None:
        cap_at = snapshot(s, t).capacity
    bound = min((cap_at[e] / g for e in path.loaded_edges), default=np.inf)
    if path.is_virtual:
        nodes = s.node_map
        held = min(nodes[m].storage_capacity for m in path.pair)
        bound = min(bound, held / (g * s.slot_duration))
    return float(bound)


class _Rows:
    def __init__(self):
        self.data: list[float] = []
        self.ri: list[int] = []
        self.ci: list[int] = []
        self.senses: list[str] = []
        self.b: list[float] = []
        self.tags: list[RowTag] = []

    def add(self, tag: RowTag, coefs: dict[int, float], sense: str, rhs: float) -> None:
        i = len(self.tags)
        for j in sorted(coefs):
            self.ri.append(i)
            self.ci.append(j)
            self.data.append(coefs[j])
        self.senses.append(sense)
        self.b.append(float(rhs))
        self.tags.append(tag)


def build(s: Scenario, table: PathTable) -> MilpInstance:
    """Assemble the model for ``s`` over the annotated path ``table``."""
    T, delta = s.slots, s.slot_duration
    for owner, o in table.options():
        if o.cost is None or o.fidelity is None:
            raise ModelBuildError(f"path {o.pid} of {_owner_name(owner)} has not been annotated")
    caps = {t: snapshot(s, t).capacity for t in range(1, T + 1)}
    idx = VariableIndex()
    ymax: dict[tuple, float] = {}
    groups: dict[tuple[int, int], list[int]] = {}

    for t in range(1, T + 1):
        for k, opts in enumerate(table.user):
            cols = []
            for o in opts:
                if o.path.valid_at(t):
                    cols.append(idx.add("x", k, o.pid, t))
            if not cols:
                cols.append(idx.add("x", k, NULL, t))
            groups[(k, t)] = cols
    for t in range(1, T + 1):
        for k, opts in enumerate(table.user):
            for o in opts:
                if o.path.valid_at(t):
                    idx.add("y", k, o.pid, t)
                    ymax[(k, o.pid, t)] = path_capacity(k, o, t, s, caps[t])
    for t in range(1, T + 1):
        for n, opts in table.storage.items():
            for o in opts:
                if o.path.valid_at(t):
                    idx.add("y", n, o.pid, t)
    for t in range(1, T + 1):
        for n, opts in table.storage.items():
            for o in opts:
                idx.add("z", n, o.pid, t)

    ncol = len(idx)
    c = np.zeros(ncol)
    lb = np.zeros(ncol)
    ub = np.full(ncol, np.inf)
    integer = np.zeros(ncol, dtype=bool)
    for col in idx.x.values():
        ub[col] = 1.0
        integer[col] = True
    for (k, pid, t), col in idx.y.items():
        if isinstance(k, int):
            c[col] = s.weights[k][t - 1]

    # serving[(n, sub pid)] -> list of (owner, option) drawing on that stock
    serving: dict[tuple, list[tuple[object, RouteOption]]] = {}
    for owner, o in table.options():
        if o.path.is_virtual:
            sub = table.sub_option(o.path.pair, o.path.sub)
            serving.setdefault((o.path.pair, sub.pid), []).append((owner, o))

    rows = _Rows()
    for (k, pid, t), col in idx.x.items():
        if pid == NULL:
            continue
        rows.add(RowTag("C1", (k, pid, t)), {idx.y[(k, pid, t)]: 1.0, col: -ymax[(k, pid, t)]}, LE, 0.0)
    for (k, t), cols in groups.items():
        rows.add(RowTag("C2", (k, t)), {col: 1.0 for col in cols}, EQ, 1.0)
    nodes = s.node_map
    for t in range(1, T + 1):
        for m in sorted(nd.id for nd in s.nodes if nd.is_storage):
            coefs = {idx.z[(n, o.pid, t)]: 1.0
                     for n, opts in table.storage.items() if m in n for o in opts}
            if coefs:
                rows.add(RowTag("C3", (m, t)), coefs, LE, nodes[m].storage_capacity)
    load: dict[tuple, dict[tuple[str, str], dict[int, float]]] = {}
    for owner, o in table.options():
        for t in range(1, T + 1):
            key = (owner, o.pid, t)
            if key not in idx.y:
                continue
            for e in o.path.loaded_edges:
                row = load.setdefault(t, {}).setdefault(e, {})
                row[idx.y[key]] = row.get(idx.y[key], 0.0) + o.cost
    for t in range(1, T + 1):
        for e in sorted(load.get(t, {})):
            rows.add(RowTag("C4", (e[0], e[1], t)), load[t][e], LE, caps[t][e])

    def drawn(n, pid, t) -> dict[int, float]:
        out: dict[int, float] = {}
        for owner, o in serving.get((n, pid), ()):
            col = idx.y.get((owner, o.pid, t))
            if col is not None:
                out[col] = out.get(col, 0.0) + o.cost * delta
        return out

    for t in range(1, T + 1):
        for n, opts in table.storage.items():
            for o in opts:
                coefs = drawn(n, o.pid, t)
                if coefs:
                    coefs[idx.z[(n, o.pid, t)]] = -1.0
                    rows.add(RowTag("C5", (n, o.pid, t)), coefs, LE, 0.0)
    for t in range(1, T + 1):
        for n, opts in table.storage.items():
            for o in opts:
                zc = idx.z[(n, o.pid, t)]
                if t == 1:
                    init = 0.0 if o.path.is_virtual else s.initial_storage.get((n, o.path.nodes), 0.0)
                    rows.add(RowTag("C6", (n, o.pid, 1)), {zc: 1.0}, EQ, init)
                    continue
                coefs = drawn(n, o.pid, t - 1)
                coefs[zc] = coefs.get(zc, 0.0) + 1.0
                prev = idx.z[(n, o.pid, t - 1)]
                coefs[prev] = coefs.get(prev, 0.0) - 1.0
                gen = idx.y.get((n, o.pid, t - 1))
                if gen is not None:
                    coefs[gen] = coefs.get(gen, 0.0) - delta
                rows.add(RowTag("C6", (n, o.pid, t)), coefs, EQ, 0.0)

    A = sp.csr_matrix((rows.data, (rows.ri, rows.ci)), shape=(len(rows.tags), ncol))
    b = np.array(rows.b)
    if not (np.all(np.isfinite(A.data)) and np.all(np.isfinite(b))):
        raise ModelBuildError("non-finite coefficient or right-hand side")
    return MilpInstance(s, table, idx, c, A, rows.senses, b, lb, ub, integer, rows.tags, ymax, groups)


@dataclass
class ResidualReport:
    residuals: np.ndarray
    flagged_rows: list[RowTag]
    bound_violations: list[tuple[ColumnTag, float]]
    integrality_violations: list[tuple[ColumnTag, float]]
    max_by_family: dict[str, float]

    @property
    def clean(self) -> bool:
        return not (self.flagged_rows or self.bound_violations or self.integrality_violations)

    @property
    def n_flags(self) -> int:
        return len(self.flagged_rows) + len(self.bound_violations) + len(self.integrality_violations)

    def summary(self) -> str:
        if self.clean:
            return "all rows within tolerance"
        parts = [f"{len(self.flagged_rows)} rows", f"{len(self.bound_violations)} bounds",
                 f"{len(self.integrality_violations)} binaries"]
        return "violations: " + ", ".join(parts)


def residuals(inst: MilpInstance, vec, tol: float = 1e-6, int_tol: float = 1e-9) -> ResidualReport:
    """Per-row residuals of a candidate column vector.

    Inequality rows report ``lhs - rhs`` (positive means violated); equality
    rows report ``|lhs - rhs|``.  Column bounds are checked under C7.
    """
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (inst.n_cols,):
        raise ValueError(f"candidate has {vec.size} entries, model has {inst.n_cols} columns")
    lhs = inst.A @ vec
    res = lhs - inst.b
    eq = np.array([s == EQ for s in inst.senses], dtype=bool)
    res[eq] = np.abs(res[eq])
    flagged = [inst.row_tags[i] for i in np.flatnonzero(res > tol)]
    tags = inst.index.tags
    bounds = []
    for j in np.flatnonzero((vec < inst.lb - tol) | (vec > inst.ub + tol)):
        bounds.append((tags[j], float(vec[j])))
    ints = []
    for j in inst.binary_cols:
        d = abs(vec[j] - round(vec[j]))
        if d > int_tol:
            ints.append((tags[j], float(vec[j])))
    fam: dict[str, float] = {}
    for r, v in zip(inst.row_tags, res):
        fam[r.family] = max(fam.get(r.family, -np.inf), float(v))
    below = np.maximum(inst.lb - vec, 0.0)
    above = np.where(np.isfinite(inst.ub), np.maximum(vec - inst.ub, 0.0), 0.0)
    fam["C7"] = float(max(below.max(initial=0.0), above.max(initial=0.0)))
    return ResidualReport(res, flagged, bounds, ints, fam)


def first_path_assignment(inst: MilpInstance) -> np.ndarray:
    """Binary vector choosing the first usable option of every (pair, slot)."""
    x = np.zeros(inst.n_cols)
    for cols in inst.groups.values():
        x[cols[0]] = 1.0
    return x


def feasibility_witness(inst: MilpInstance, x: np.ndarray | None = None) -> np.ndarray:
    """Feasible point: a C2 assignment, zero rates, initial stock carried forward."""
    vec = first_path_assignment(inst) if x is None else np.asarray(x, dtype=float).copy()
    vec[~inst.integer] = 0.0
    s = inst.scenario
    for (n, pid, t), col in inst.index.z.items():
        o = next(o for o in inst.table.storage[n] if o.pid == pid)
        vec[col] = 0.0 if o.path.is_virtual else s.initial_storage.get((n, o.path.nodes), 0.0)
    return vec


@dataclass
class RoutingSolution:
    """Decoded plan: chosen path per (user pair, slot), rates and stocks."""

    scheme: str
    status: str
    objective: float
    total_pairs: float
    selection: dict[tuple[int, int], str]
    rates: dict[tuple, float]
    stocks: dict[tuple, float]
    vector: np.ndarray
    report: ResidualReport
    bound: float = float("nan")
    gap: float = 0.0
    iterations: int = 0
    wall_time: float = 0.0
    log: list[dict] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == "optimal"


def decode(inst: MilpInstance, vec: np.ndarray, scheme: str, status: str, **kw) -> RoutingSolution:
    vec = np.asarray(vec, dtype=float)
    sel = {}
    for (k, t), cols in inst.groups.items():
        best = max(cols, key=lambda j: vec[j])
        sel[(k, t)] = inst.index.tags[best].pid
    rates = {key: float(vec[col]) for key, col in inst.index.y.items()}
    stocks = {key: float(vec[col]) for key, col in inst.index.z.items()}
    delta = inst.scenario.slot_duration
    total = sum(v for (o, _, _), v in rates.items() if isinstance(o, int)) * delta
    return RoutingSolution(scheme, status, inst.objective(vec), float(total), sel, rates, stocks,
                           vec, residuals(inst, vec), **kw)
