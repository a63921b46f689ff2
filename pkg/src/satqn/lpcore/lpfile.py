"""Read and write the CPLEX-style LP text format.

Only the subset needed for linear and mixed-binary models is supported:
an objective section, ``Subject To`` rows, ``Bounds``, ``Binaries`` and
``End``.  Row names are written as ``name:`` prefixes.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .simplex import EQ, GE, LE, LpProblem

_NAME_BAD = re.compile(r"[^A-Za-z0-9_.\[\]()#$%&{}~@!]")
_OPS = ("<=", ">=", "=<", "=>", "<", ">", "=")
_TOKEN = re.compile(
    r"\s*(<=|>=|=<|=>|<|>|="
    r"|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
    r"|[+-]"
    r"|[^\s+\-<>=:]+:"
    r"|[^\s+\-<>=]+)"
)
_SECTIONS = {
    "maximize": "max", "maximum": "max", "max": "max",
    "minimize": "min", "minimum": "min", "min": "min",
    "subject to": "st", "such that": "st", "st": "st", "s.t.": "st",
    "bounds": "bounds", "bound": "bounds",
    "binaries": "bin", "binary": "bin", "bin": "bin",
    "generals": "gen", "general": "gen", "gen": "gen",
    "end": "end",
}


class LpParseError(ValueError):
    pass


def clean_name(name) -> str:
    out = _NAME_BAD.sub("_", str(name))
    if not out or out[0].isdigit() or out[0] in ".eE":
        out = "_" + out
    return out


def _fmt(v: float) -> str:
    return repr(float(v))


def _expr(coefs, names) -> str:
    parts = []
    for k, (a, name) in enumerate(zip(coefs, names)):
        if k == 0:
            parts.append(f"{'-' if a < 0 else ''}{_fmt(abs(a))} {name}")
        else:
            parts.append(f"{'-' if a < 0 else '+'} {_fmt(abs(a))} {name}")
    return " ".join(parts)


def _wrap(text: str, width: int = 250) -> list[str]:
    out, line = [], ""
    for tok in text.split(" "):
        if line and len(line) + len(tok) + 1 > width:
            out.append(line)
            line = tok
        else:
            line = f"{line} {tok}" if line else tok
    if line:
        out.append(line)
    return out


def dumps_lp(problem: LpProblem, binary=()) -> str:
    """Render ``problem`` as LP text; ``binary`` lists the binary columns."""
    m, n = problem.shape
    if n == 0:
        raise ValueError("cannot write a problem without columns")
    cnames = [clean_name(c) for c in (problem.col_names or [f"x{j}" for j in range(n)])]
    rnames = [clean_name(r) for r in (problem.row_names or [f"r{i}" for i in range(m)])]
    if len(set(cnames)) != n or len(set(rnames)) != m:
        raise ValueError("column and row names must be unique after sanitizing")
    lines = ["\\ LP model", "Maximize" if problem.maximize else "Minimize"]
    nz = np.flatnonzero(problem.c)
    obj = _expr(problem.c[nz], [cnames[j] for j in nz]) if nz.size else f"0 {cnames[0]}"
    lines += [(" obj: " if k == 0 else "   ") + chunk for k, chunk in enumerate(_wrap(obj))]
    lines.append("Subject To")
    A = problem.A.tocsr()
    A.sort_indices()
    for i in range(m):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        cols, vals = A.indices[lo:hi], A.data[lo:hi]
        keep = vals != 0
        cols, vals = cols[keep], vals[keep]
        body = _expr(vals, [cnames[j] for j in cols]) if cols.size else f"0 {cnames[0]}"
        sense = {LE: "<=", GE: ">=", EQ: "="}[problem.senses[i]]
        text = f"{rnames[i]}: {body} {sense} {_fmt(problem.b[i])}"
        lines += [(" " if k == 0 else "   ") + chunk for k, chunk in enumerate(_wrap(text))]
    lines.append("Bounds")
    bset = {int(j) for j in binary}
    for j in range(n):
        if j in bset:
            continue
        lo, hi = problem.lb[j], problem.ub[j]
        if lo == 0 and hi == np.inf:
            continue
        if lo == -np.inf and hi == np.inf:
            lines.append(f" {cnames[j]} free")
        elif lo == hi:
            lines.append(f" {cnames[j]} = {_fmt(lo)}")
        else:
            left = "-inf" if lo == -np.inf else _fmt(lo)
            right = "+inf" if hi == np.inf else _fmt(hi)
            lines.append(f" {left} <= {cnames[j]} <= {right}")
    if bset:
        lines.append("Binaries")
        lines += [" " + chunk for chunk in _wrap(" ".join(cnames[j] for j in sorted(bset)))]
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp(problem: LpProblem, path, binary=()) -> None:
    Path(path).write_text(dumps_lp(problem, binary), encoding="utf-8")


def _is_number(tok: str) -> bool:
    return bool(tok) and (tok[0].isdigit() or tok[0] == ".")


def _parse_linear(tokens: list[str]) -> dict[str, float]:
    coefs: dict[str, float] = {}
    sign, pending = 1.0, None
    for tok in tokens:
        if tok == "+":
            continue
        if tok == "-":
            sign = -sign
            continue
        if _is_number(tok):
            pending = float(tok) if pending is None else pending * float(tok)
            continue
        coefs[tok] = coefs.get(tok, 0.0) + sign * (1.0 if pending is None else pending)
        sign, pending = 1.0, None
    if pending is not None and pending != 0:
        raise LpParseError("constant terms in linear expressions are not supported")
    return coefs


def _bound_value(tok: str) -> float:
    low = tok.lower()
    if low in ("inf", "+inf", "infinity", "+infinity"):
        return np.inf
    if low in ("-inf", "-infinity"):
        return -np.inf
    return float(tok)


def _parse_bound(line: str) -> list[tuple[str, str, float]]:
    """Return (name, 'lo'|'hi', value) updates for one bounds line."""
    toks = re.sub(r"(<=|>=|=<|=>|=)", r" \1 ", line).split()
    if len(toks) == 2 and toks[1].lower() == "free":
        return [(toks[0], "lo", -np.inf), (toks[0], "hi", np.inf)]
    if len(toks) == 5 and toks[1] in ("<=", "=<") and toks[3] in ("<=", "=<"):
        return [(toks[2], "lo", _bound_value(toks[0])), (toks[2], "hi", _bound_value(toks[4]))]
    if len(toks) == 3:
        a, op, b = toks
        try:
            val, name = _bound_value(b), a
        except ValueError:
            val, name = _bound_value(a), b
            op = {"<=": ">=", "=<": ">=", ">=": "<=", "=>": "<="}.get(op, op)
        if op == "=":
            return [(name, "lo", val), (name, "hi", val)]
        return [(name, "hi" if op in ("<=", "=<") else "lo", val)]
    raise LpParseError(f"cannot parse bound line {line!r}")


def loads_lp(text: str) -> tuple[LpProblem, list[int]]:
    """Parse LP text into a problem plus the list of binary column indices."""
    section = None
    maximize = True
    obj_tokens: list[str] = []
    rows: list[list[str]] = []
    bounds: list[tuple[str, str, float]] = []
    binary_names: list[str] = []
    open_row: list[str] | None = None
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = line.lower()
        if key in _SECTIONS:
            section = _SECTIONS[key]
            open_row = None
            if section in ("max", "min"):
                maximize = section == "max"
            if section == "end":
                break
            continue
        if section in ("max", "min"):
            obj_tokens.extend(_TOKEN.findall(line))
        elif section == "st":
            toks = _TOKEN.findall(line)
            if open_row is None:
                open_row = []
                rows.append(open_row)
            open_row.extend(toks)
            ops = [i for i, t in enumerate(open_row) if t in _OPS]
            if ops and any(_is_number(t) for t in open_row[ops[0] + 1:]):
                open_row = None
        elif section == "bounds":
            bounds.extend(_parse_bound(line))
        elif section == "bin":
            binary_names.extend(line.split())
        elif section == "gen":
            raise LpParseError("general integer columns are not supported")
        else:
            raise LpParseError(f"content outside any section: {line!r}")
    if open_row is not None:
        raise LpParseError("constraint without right-hand side")

    names: list[str] = []
    index: dict[str, int] = {}

    def col(name: str) -> int:
        if name not in index:
            index[name] = len(names)
            names.append(name)
        return index[name]

    if obj_tokens and obj_tokens[0].endswith(":"):
        obj_tokens = obj_tokens[1:]
    obj = _parse_linear(obj_tokens)
    for name in obj:
        col(name)
    row_names, senses, rhs, entries = [], [], [], []
    for k, toks in enumerate(rows):
        name = f"r{k}"
        if toks[0].endswith(":"):
            name, toks = toks[0][:-1], toks[1:]
        op_at = next(i for i, t in enumerate(toks) if t in _OPS)
        lhs = _parse_linear(toks[:op_at])
        tail = toks[op_at + 1:]
        neg = sum(1 for t in tail if t == "-") % 2 == 1
        value = float(next(t for t in tail if _is_number(t)))
        op = toks[op_at]
        senses.append(LE if op in ("<=", "=<", "<") else GE if op in (">=", "=>", ">") else EQ)
        row_names.append(name)
        rhs.append(-value if neg else value)
        entries.append({col(v): a for v, a in lhs.items()})
    for name, _, _ in bounds:
        col(name)
    for name in binary_names:
        col(name)
    n = len(names)
    lb, ub = np.zeros(n), np.full(n, np.inf)
    for name, side, val in bounds:
        (lb if side == "lo" else ub)[index[name]] = val
    binary = sorted({index[nm] for nm in binary_names})
    for j in binary:
        lb[j], ub[j] = max(lb[j], 0.0), min(ub[j], 1.0)
    ri = [i for i, ent in enumerate(entries) for _ in ent]
    ci = [j for ent in entries for j in ent]
    data = [a for ent in entries for a in ent.values()]
    A = sp.csr_matrix((data, (ri, ci)), shape=(len(entries), n))
    c = np.zeros(n)
    for v, a in obj.items():
        c[index[v]] = a
    return LpProblem(c, A, senses, np.array(rhs), lb, ub, maximize, row_names, names), binary


def read_lp(path) -> tuple[LpProblem, list[int]]:
    return loads_lp(Path(path).read_text(encoding="utf-8"))
