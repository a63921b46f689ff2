"""Command line: ``satqn {generate,solve,compare,sweep,solve-lp}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .. import baselines
from ..lpcore import read_lp, solve_bnb, solve_lp
from ..model import RoutingSolution, residuals
from ..topology import validate_scenario
from .experiment import ExperimentConfig, ExperimentError, run_experiment
from .generator import GeneratorParams, ScenarioConfigError, generate_scenario
from .scenario_io import ScenarioFormatError, dump_scenario, read_scenario

SOLUTION_VERSION = 1


def _gen_params(ns) -> GeneratorParams:
    p = GeneratorParams()
    kw = {}
    for name in ("n_pairs", "slots", "storage_capacity", "fidelity_threshold"):
        v = getattr(ns, name, None)
        if v is not None:
            kw[name] = v
    if getattr(ns, "hop_limit", None) is not None:
        kw["max_hops"] = ns.hop_limit
    if getattr(ns, "paths_per_pair", None) is not None:
        kw["max_paths"] = ns.paths_per_pair
    return p.with_(**kw)


def _scenario(ns):
    if getattr(ns, "scenario", None):
        s = read_scenario(ns.scenario)
    else:
        s = generate_scenario(_gen_params(ns), ns.seed)
    bad = validate_scenario(s)
    if bad:
        raise ScenarioConfigError("invalid scenario:\n  " + "\n  ".join(map(str, bad)))
    return s


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def solution_document(sol: RoutingSolution, inst, scenario, H, P) -> dict:
    names = [t.name for t in inst.index.tags]
    return {
        "solution_version": SOLUTION_VERSION,
        "scheme": sol.scheme, "scenario": scenario.name, "status": sol.status,
        "hop_limit": H, "paths_per_pair": P,
        "objective": sol.objective, "total_pairs": sol.total_pairs,
        "bound": sol.bound, "gap": sol.gap, "iterations": sol.iterations,
        "selection": [{"pair": k, "slot": t, "path": pid} for (k, t), pid in sorted(sol.selection.items())],
        "columns": {n: float(v) for n, v in zip(names, sol.vector)},
        "residuals": sol.report.summary(),
    }


def _write_solution(out: Path, sol: RoutingSolution, inst, s, H, P) -> None:
    out.mkdir(parents=True, exist_ok=True)
    doc = solution_document(sol, inst, s, H, P)
    (out / "solution.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    rep = sol.report
    rows = [(t.name, t.family, inst.senses[i], f"{rep.residuals[i]:.6g}") for i, t in enumerate(inst.row_tags)]
    (out / "residuals.csv").write_text(_csv(("row", "family", "sense", "residual"), rows), encoding="utf-8")
    if sol.log:
        keys = list(sol.log[0])
        (out / "iterations.csv").write_text(
            _csv(keys, [[f"{r[k]:.10g}" if isinstance(r[k], float) else r[k] for k in keys] for r in sol.log]),
            encoding="utf-8")


def validate_solution(path, s) -> tuple[bool, str]:
    """Rebuild the scheme's model for ``s`` and re-check a saved solution."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    inst = baselines.scheme_instance(s, doc["scheme"], doc.get("hop_limit"), doc.get("paths_per_pair"))
    cols = doc["columns"]
    names = [t.name for t in inst.index.tags]
    missing = [n for n in names if n not in cols]
    extra = sorted(set(cols) - set(names))
    if missing or extra:
        return False, f"column mismatch: {len(missing)} missing, {len(extra)} unknown"
    vec = np.array([cols[n] for n in names])
    rep = residuals(inst, vec)
    return rep.clean, rep.summary()


def cmd_generate(ns) -> int:
    s = generate_scenario(_gen_params(ns), ns.seed)
    text = dump_scenario(s)
    if ns.out:
        Path(ns.out).write_text(text, encoding="utf-8")
        print(f"wrote {ns.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_solve(ns) -> int:
    s = _scenario(ns)
    if ns.validate_only:
        ok, msg = validate_solution(ns.validate_only, s)
        print(("valid: " if ok else "INVALID: ") + msg)
        return 0 if ok else 1
    H, P = ns.hop_limit, ns.paths_per_pair
    sol = baselines.solve_scheme(s, ns.scheme, ns.gap, ns.max_iters, H, P, ns.seed, ns.samples)
    inst = baselines.scheme_instance(s, ns.scheme, H, P)
    print(f"scheme {sol.scheme} status {sol.status} objective {sol.objective:.10g} "
          f"total_pairs {sol.total_pairs:.10g} iterations {sol.iterations} residuals: {sol.report.summary()}")
    if ns.out:
        _write_solution(Path(ns.out), sol, inst, s, H, P)
        print(f"wrote {ns.out}/solution.json")
    return 0 if sol.report.clean else 1


def cmd_compare(ns) -> int:
    s = _scenario(ns)
    rows = baselines.compare(s, seeds=tuple(ns.rrs_seeds), samples=ns.samples, gap_tol=ns.gap,
                             max_iters=ns.max_iters, H=ns.hop_limit, P=ns.paths_per_pair)
    text = baselines.comparison_csv(rows)
    sys.stdout.write(text)
    if ns.out:
        out = Path(ns.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "comparison.csv").write_text(text, encoding="utf-8")
    return 0 if all(not r.error for r in rows) else 1


def cmd_sweep(ns) -> int:
    values = [float(v) if ns.variable == "storage_capacity" else int(v) for v in ns.values.split(",")]
    cfg = ExperimentConfig(
        sweep_variable=ns.variable, values=tuple(values), schemes=tuple(ns.schemes.split(",")),
        scenario_file=ns.scenario, params=_gen_params(ns), seed=ns.seed,
        rrs_seeds=tuple(ns.rrs_seeds), rrs_samples=ns.samples, gap_tol=ns.gap, max_iters=ns.max_iters,
        hop_limit=ns.hop_limit, paths_per_pair=ns.paths_per_pair, out_dir=ns.out or "results",
        workers=ns.workers)
    res = run_experiment(cfg)
    print(json.dumps(res.summary["flags"], sort_keys=True))
    print(f"wrote {res.files['results']}")
    return 0 if res.ok else 1


def cmd_solve_lp(ns) -> int:
    prob, binary = read_lp(ns.file)
    if binary:
        res = solve_bnb(prob, binary, gap_tol=ns.gap)
        print(f"status {res.status.value} objective {res.objective:.10g} bound {res.bound:.10g} nodes {res.nodes}")
        x = res.x
    else:
        res = solve_lp(prob)
        print(f"status {res.status.value} objective {res.objective:.10g} iterations {res.iterations}")
        x = res.x
    if x is not None and ns.out:
        names = prob.col_names or [f"x{j}" for j in range(prob.shape[1])]
        Path(ns.out).write_text(_csv(("column", "value"), [(n, f"{v:.12g}") for n, v in zip(names, x)]),
                                encoding="utf-8")
    return 0 if x is not None else 1


def _common(p: argparse.ArgumentParser, scenario: bool = True) -> None:
    if scenario:
        p.add_argument("scenario", nargs="?", help="scenario JSON file (default: generate one from --seed)")
    p.add_argument("--seed", type=int, default=0, help="generator / sampling seed (default 0)")
    p.add_argument("--gap", type=float, default=1e-6, help="relative optimality gap (default 1e-6)")
    p.add_argument("--max-iters", type=int, default=500, help="Benders iteration cap (default 500)")
    p.add_argument("--paths-per-pair", type=int, default=None, help="path cap P (default: scenario value, 10)")
    p.add_argument("--hop-limit", type=int, default=None, help="hop cap H (default: scenario value, 6)")
    p.add_argument("--out", default=None, help="output file or directory")


def _gen_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pairs", dest="n_pairs", type=int, default=None, help="user pairs K (default 3)")
    p.add_argument("--slots", type=int, default=None, help="time slots T (default 10)")
    p.add_argument("--storage", dest="storage_capacity", type=float, default=None,
                   help="storage capacity of storage nodes (default 1500)")
    p.add_argument("--threshold", dest="fidelity_threshold", type=float, default=None,
                   help="user fidelity threshold (default 0.95)")


def _rrs_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--samples", type=int, default=20, help="random-routing samples R (default 20)")
    p.add_argument("--rrs-seeds", type=int, nargs="+", default=[0], help="random-routing seeds (default 0)")


def parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="satqn", description="Entanglement routing planner for "
                                 "satellite-aerial-terrestrial quantum networks.")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a generated scenario file")
    _common(p, scenario=False)
    _gen_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="solve one scenario with one scheme")
    _common(p)
    _gen_flags(p)
    _rrs_flags(p)
    p.add_argument("--scheme", choices=baselines.SCHEMES, default="ps-egr", help="scheme (default ps-egr)")
    p.add_argument("--validate-only", metavar="SOLUTION", default=None,
                   help="re-check a saved solution.json against the scenario instead of solving")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", help="run all schemes on one scenario")
    _common(p)
    _gen_flags(p)
    _rrs_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="sweep storage capacity or user pairs")
    _common(p)
    _gen_flags(p)
    _rrs_flags(p)
    p.add_argument("--variable", choices=("storage_capacity", "user_pairs"), default="storage_capacity",
                   help="swept quantity (default storage_capacity)")
    p.add_argument("--values", default="0,500,1000,1500,2000", help="comma-separated ascending values")
    p.add_argument("--schemes", default=",".join(baselines.SCHEMES), help="comma-separated schemes")
    p.add_argument("--workers", type=int, default=1, help="parallel sweep points (default 1)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("solve-lp", help="solve a standalone LP file")
    p.add_argument("file", help="LP file")
    p.add_argument("--gap", type=float, default=1e-6, help="branch-and-bound gap for binaries (default 1e-6)")
    p.add_argument("--out", default=None, help="CSV file for the solution vector")
    p.set_defaults(func=cmd_solve_lp)
    return ap


def main(argv=None) -> int:
    ap = parser()
    ns = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return ns.func(ns)
    except (ScenarioConfigError, ScenarioFormatError, ExperimentError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


cli = main


if __name__ == "__main__":
    sys.exit(main())
