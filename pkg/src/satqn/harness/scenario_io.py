"""JSON scenario files.

Schema (``schema_version`` 1)::

    {
      "schema_version": 1,
      "name": str, "slots": int, "slot_duration": float, "rng_seed": int,
      "max_hops": int, "max_paths": int, "storage_threshold": float | null,
      "nodes": [{"id": str, "kind": "satellite|aerial|terrestrial",
                 "storage_capacity": float}],
      "links": [{"endpoints": [str, str], "kind": "S2S|S2A|A2A|S2G|A2G|G2G",
                 "capacity": [float] * slots, "fidelity": float,
                 "active": [bool] * slots}],
      "user_pairs": [{"src": str, "dst": str, "weights": [float] * slots,
                      "fidelity_threshold": float}],
      "initial_storage": [{"pair": [str, str], "path": [str, ...], "stock": float}]
    }

Output is key-sorted with fixed indentation, so equal scenarios give
byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..topology import Link, LinkKind, Node, NodeKind, Scenario

SCHEMA_VERSION = 1


class ScenarioFormatError(ValueError):
    pass


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": s.name,
        "slots": s.slots,
        "slot_duration": s.slot_duration,
        "rng_seed": s.rng_seed,
        "max_hops": s.max_hops,
        "max_paths": s.max_paths,
        "storage_threshold": s.storage_threshold,
        "nodes": [{"id": n.id, "kind": n.kind.value, "storage_capacity": n.storage_capacity}
                  for n in s.nodes],
        "links": [{"endpoints": list(l.endpoints), "kind": l.kind.value, "capacity": list(l.capacity),
                   "fidelity": l.fidelity, "active": list(l.active)} for l in s.links],
        "user_pairs": [{"src": a, "dst": b, "weights": list(w), "fidelity_threshold": f}
                       for (a, b), w, f in zip(s.user_pairs, s.weights, s.fidelity_thresholds)],
        "initial_storage": [{"pair": list(pair), "path": list(path), "stock": v}
                            for (pair, path), v in sorted(s.initial_storage.items())],
    }


def scenario_from_dict(d: dict) -> Scenario:
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ScenarioFormatError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    try:
        nodes = tuple(Node(n["id"], NodeKind(n["kind"]), float(n.get("storage_capacity", 0.0)))
                      for n in d["nodes"])
        links = tuple(Link(tuple(l["endpoints"]), LinkKind(l["kind"]), tuple(float(c) for c in l["capacity"]),
                           float(l["fidelity"]), tuple(bool(a) for a in l["active"])) for l in d["links"])
        pairs = d["user_pairs"]
        init = {(tuple(e["pair"]), tuple(e["path"])): float(e["stock"]) for e in d.get("initial_storage", [])}
        return Scenario(
            nodes=nodes, links=links,
            user_pairs=tuple((p["src"], p["dst"]) for p in pairs),
            weights=tuple(tuple(p["weights"]) for p in pairs),
            slots=int(d["slots"]), slot_duration=float(d["slot_duration"]),
            fidelity_thresholds=tuple(float(p["fidelity_threshold"]) for p in pairs),
            initial_storage=init, storage_threshold=d.get("storage_threshold"),
            max_hops=int(d.get("max_hops", 6)), max_paths=int(d.get("max_paths", 10)),
            rng_seed=int(d.get("rng_seed", 0)), name=str(d.get("name", "scenario")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"malformed scenario: {exc!r}") from exc


def dump_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=1, sort_keys=True) + "\n"


def load_scenario(text: str) -> Scenario:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise ScenarioFormatError("top level must be an object")
    return scenario_from_dict(d)


def write_scenario(s: Scenario, path) -> None:
    Path(path).write_text(dump_scenario(s), encoding="utf-8")


def read_scenario(path) -> Scenario:
    return load_scenario(Path(path).read_text(encoding="utf-8"))
