"""Parameter sweeps over storage capacity or number of user pairs.

A run writes three files to ``out_dir``:

* ``results.csv``: one row per (sweep value, scheme); no timing columns, so a
  fixed config reproduces it byte for byte;
* ``timing.csv``: wall time per row;
* ``summary.json``: config echo, per-scheme series and trend flags.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .. import baselines
from ..topology import Scenario
from .generator import GeneratorParams, generate_scenario
from .scenario_io import read_scenario

SWEEP_VARIABLES = ("storage_capacity", "user_pairs")
TREND_TOL = 1e-6
FLAT_TOL = 1e-9


class ExperimentError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    sweep_variable: str = "storage_capacity"
    values: tuple = (0, 500, 1000, 1500, 2000)
    schemes: tuple[str, ...] = baselines.SCHEMES
    scenario_file: str | None = None
    params: GeneratorParams = field(default_factory=GeneratorParams)
    seed: int = 0
    rrs_seeds: tuple[int, ...] = (0,)
    rrs_samples: int = 20
    gap_tol: float = 1e-6
    max_iters: int = 500
    hop_limit: int | None = None
    paths_per_pair: int | None = None
    out_dir: str = "results"
    workers: int = 1

    def validate(self) -> None:
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ExperimentError(f"sweep variable must be one of {SWEEP_VARIABLES}")
        if not self.values:
            raise ExperimentError("sweep values must be nonempty")
        if list(self.values) != sorted(self.values):
            raise ExperimentError("sweep values must be sorted ascending")
        if not self.schemes:
            raise ExperimentError("scheme list is empty")
        bad = set(self.schemes) - set(baselines.SCHEMES)
        if bad:
            raise ExperimentError(f"unknown schemes {sorted(bad)}")
        if self.workers < 1:
            raise ExperimentError("workers must be >= 1")


def scenario_at(cfg: ExperimentConfig, value) -> Scenario:
    """Scenario for one sweep point."""
    if cfg.scenario_file is None:
        if cfg.sweep_variable == "storage_capacity":
            return generate_scenario(replace(cfg.params, storage_capacity=float(value)), cfg.seed)
        return generate_scenario(replace(cfg.params, n_pairs=int(value)), cfg.seed)
    base = read_scenario(cfg.scenario_file)
    if cfg.sweep_variable == "storage_capacity":
        nodes = tuple(replace(n, storage_capacity=float(value)) if n.is_storage else n for n in base.nodes)
        return replace(base, nodes=nodes, initial_storage={} if value == 0 else base.initial_storage)
    k = int(value)
    if not 1 <= k <= base.n_pairs:
        raise ExperimentError(f"scenario has {base.n_pairs} user pairs, cannot take {k}")
    return replace(base, user_pairs=base.user_pairs[:k], weights=base.weights[:k],
                   fidelity_thresholds=base.fidelity_thresholds[:k])


def _point(args) -> list[dict]:
    cfg, value = args
    s = scenario_at(cfg, value)
    rows = baselines.compare(s, seeds=cfg.rrs_seeds, samples=cfg.rrs_samples, gap_tol=cfg.gap_tol,
                             max_iters=cfg.max_iters, H=cfg.hop_limit, P=cfg.paths_per_pair,
                             schemes=cfg.schemes)
    return [dict(asdict(r), value=value) for r in rows]


RESULT_FIELDS = ("sweep_variable", "value", "scheme", "scenario", "storage_capacity", "n_pairs",
                 "objective", "total_pairs", "converged", "residual_clean", "dominated", "error")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def trend_flags(cfg: ExperimentConfig, rows: list[dict]) -> dict:
    series = {sch: [r["objective"] for r in rows if r["scheme"] == sch] for sch in cfg.schemes}
    flags: dict = {}
    for sch, ys in series.items():
        ok = all(np.isfinite(ys)) and all(b >= a - TREND_TOL * max(1.0, abs(a)) for a, b in zip(ys, ys[1:]))
        flags[f"{sch}_nondecreasing"] = bool(ok)
    if cfg.sweep_variable == "storage_capacity" and "nss" in series:
        ys = series["nss"]
        flags["nss_flat"] = bool(len(ys) > 0 and np.all(np.isfinite(ys)) and max(ys) - min(ys) < FLAT_TOL)
    doms = [r["dominated"] for r in rows if r["dominated"] is not None]
    flags["dominance_all"] = bool(doms) and all(doms) if "ps-egr" in cfg.schemes and len(cfg.schemes) > 1 else None
    flags["residuals_clean"] = all(r["residual_clean"] for r in rows)
    flags["errors"] = sum(1 for r in rows if r["error"])
    return {"series": series, "flags": flags}


@dataclass
class ExperimentResult:
    rows: list[dict]
    summary: dict
    files: dict[str, Path]

    @property
    def ok(self) -> bool:
        return self.summary["flags"]["errors"] == 0


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    cfg.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, v) for v in cfg.values]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            points = list(ex.map(_point, jobs))
    else:
        points = [_point(j) for j in jobs]
    rows = [dict(r, sweep_variable=cfg.sweep_variable) for pt in points for r in pt]

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_FIELDS)
    for r in rows:
        w.writerow([_fmt(r[k]) for k in RESULT_FIELDS])
    (out / "results.csv").write_text(buf.getvalue(), encoding="utf-8")

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("value", "scheme", "wall_time"))
    for r in rows:
        w.writerow([_fmt(r["value"]), r["scheme"], f"{r['wall_time']:.4f}"])
    (out / "timing.csv").write_text(buf.getvalue(), encoding="utf-8")

    summary = trend_flags(cfg, rows)
    summary["config"] = {
        "sweep_variable": cfg.sweep_variable, "values": list(cfg.values), "schemes": list(cfg.schemes),
        "scenario_file": cfg.scenario_file, "seed": cfg.seed, "rrs_seeds": list(cfg.rrs_seeds),
        "rrs_samples": cfg.rrs_samples, "gap_tol": cfg.gap_tol, "max_iters": cfg.max_iters,
        "hop_limit": cfg.hop_limit, "paths_per_pair": cfg.paths_per_pair,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    files = {"results": out / "results.csv", "timing": out / "timing.csv", "summary": out / "summary.json"}
    return ExperimentResult(rows, summary, files)
