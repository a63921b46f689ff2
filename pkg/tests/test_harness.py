from __future__ import annotations

import json
from dataclasses import replace

import numpy as np
import pytest

from satqn.harness import (ExperimentConfig, ExperimentError, GeneratorParams, ScenarioConfigError,
                           ScenarioFormatError, dump_scenario, generate_scenario, load_scenario,
                           read_scenario, run_experiment, write_scenario)
from satqn.harness.cli import main
from satqn.harness.generator import random_small_scenario, toy_scenario
from satqn.topology import LinkKind, NodeKind, validate_scenario


def test_default_generator_shape():
    s = generate_scenario(seed=0)
    kinds = [n.kind for n in s.nodes]
    assert kinds.count(NodeKind.SATELLITE) == 2 and kinds.count(NodeKind.AERIAL) == 2
    assert kinds.count(NodeKind.TERRESTRIAL) == 12
    assert s.n_pairs == 3 and s.slots == 10 and s.slot_duration == 20.0
    node = s.node_map
    for a, b in s.user_pairs:
        assert node[a].kind is NodeKind.TERRESTRIAL and node[b].kind is NodeKind.TERRESTRIAL
    assert {n.id for n in s.storage_nodes()} == {"SAT1", "SAT2", "HAP1", "HAP2"}
    assert all(n.storage_capacity == 1500.0 for n in s.storage_nodes())
    # cities meet only through the non-terrestrial layers
    assert not any(l.kind is LinkKind.G2G and l.endpoints[0][:3] != l.endpoints[1][:3] for l in s.links)


def test_generator_determinism():
    assert generate_scenario(seed=9) == generate_scenario(seed=9)
    assert dump_scenario(generate_scenario(seed=9)) == dump_scenario(generate_scenario(seed=9))
    assert generate_scenario(seed=9) != generate_scenario(seed=10)


def test_pair_count_does_not_change_links():
    a = generate_scenario(GeneratorParams(n_pairs=1), seed=4)
    b = generate_scenario(GeneratorParams(n_pairs=6), seed=4)
    assert a.links == b.links and b.user_pairs[:1] == a.user_pairs


def test_sampled_ranges():
    free, ground, fid = [], [], []
    for seed in range(12):
        s = generate_scenario(GeneratorParams(slots=40), seed)
        for l in s.links:
            (ground if l.kind is LinkKind.G2G else free).extend(l.capacity)
            fid.append(l.fidelity)
    assert len(free) + len(ground) >= 10**4
    assert 200 <= min(free) and max(free) <= 1400
    assert 400 <= min(ground) and max(ground) <= 1600
    assert 0.96 <= min(fid) and max(fid) <= 0.99


def test_generator_config_errors():
    with pytest.raises(ScenarioConfigError):
        generate_scenario(GeneratorParams(n_pairs=7))
    with pytest.raises(ScenarioConfigError):
        generate_scenario(GeneratorParams(storage_nodes=("NOPE",)))
    with pytest.raises(ScenarioConfigError):
        generate_scenario(GeneratorParams(fidelity=(0.4, 0.9)))


def test_outages():
    s = generate_scenario(GeneratorParams(outages=(("HAP1", "SRC1", 2),)), seed=1)
    link = s.link_map[("HAP1", "SRC1")]
    assert link.active[1] is False and link.capacity[1] == 0.0 and all(link.active[i] for i in (0, 2))


@pytest.mark.parametrize("seed", range(20))
def test_generated_scenarios_validate(seed):
    assert validate_scenario(random_small_scenario(seed)) == []
    assert validate_scenario(generate_scenario(seed=seed)) == []


def test_scenario_round_trip(tmp_path):
    s = replace(toy_scenario(), initial_storage={(("2", "5"), ("2", "4", "5")): 12.5})
    path = tmp_path / "toy.json"
    write_scenario(s, path)
    assert read_scenario(path) == s
    d = json.loads(path.read_text())
    d["schema_version"] = 99
    with pytest.raises(ScenarioFormatError):
        load_scenario(json.dumps(d))
    with pytest.raises(ScenarioFormatError):
        load_scenario("{not json")
    with pytest.raises(ScenarioFormatError):
        load_scenario('{"schema_version": 1}')


def small_cfg(tmp_path, **kw):
    params = GeneratorParams(slots=2, n_pairs=2)
    base = dict(values=(0, 750, 1500, 2250), params=params, out_dir=str(tmp_path), rrs_samples=3)
    base.update(kw)
    return ExperimentConfig(**base)


def test_storage_sweep_row_census_and_flags(tmp_path):
    res = run_experiment(small_cfg(tmp_path))
    lines = res.files["results"].read_text().splitlines()
    assert len(lines) == 1 + 4 * 4
    flags = res.summary["flags"]
    assert flags["nss_flat"] and flags["ps-egr_nondecreasing"] and flags["dominance_all"]
    assert flags["errors"] == 0 and res.ok


def test_sweep_results_byte_identical(tmp_path):
    a = run_experiment(small_cfg(tmp_path / "a", values=(0, 1500)))
    b = run_experiment(small_cfg(tmp_path / "b", values=(0, 1500)))
    assert a.files["results"].read_bytes() == b.files["results"].read_bytes()
    assert a.files["summary"].read_text() == b.files["summary"].read_text().replace(str(tmp_path / "b"), str(tmp_path / "a"))


def test_pair_sweep_from_file(tmp_path):
    path = tmp_path / "s.json"
    write_scenario(generate_scenario(GeneratorParams(slots=2, n_pairs=4), seed=2), path)
    cfg = ExperimentConfig(sweep_variable="user_pairs", values=(1, 2, 3, 4), schemes=("ps-egr", "nss"),
                           scenario_file=str(path), out_dir=str(tmp_path / "out"))
    res = run_experiment(cfg)
    assert res.summary["flags"]["ps-egr_nondecreasing"]
    with pytest.raises(ExperimentError):
        run_experiment(replace(cfg, values=(1, 9)))


def test_config_errors(tmp_path):
    with pytest.raises(ExperimentError):
        run_experiment(small_cfg(tmp_path, schemes=()))
    with pytest.raises(ExperimentError):
        run_experiment(small_cfg(tmp_path, values=(1500, 0)))
    with pytest.raises(ExperimentError):
        run_experiment(small_cfg(tmp_path, values=()))
    with pytest.raises(ExperimentError):
        run_experiment(small_cfg(tmp_path, schemes=("ps-egr", "magic")))
    with pytest.raises(ExperimentError):
        run_experiment(small_cfg(tmp_path, sweep_variable="slots"))


def test_cli_generate_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["generate", "--seed", "7", "--out", str(a)]) == 0
    assert main(["generate", "--seed", "7", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_cli_solve_and_validate_toy(tmp_path, capsys):
    scen = tmp_path / "toy.json"
    write_scenario(toy_scenario(), scen)
    out = tmp_path / "sol"
    assert main(["solve", str(scen), "--scheme", "ps-egr", "--out", str(out)]) == 0
    assert "objective" in capsys.readouterr().out
    assert (out / "residuals.csv").exists() and (out / "iterations.csv").exists()
    assert main(["solve", str(scen), "--validate-only", str(out / "solution.json")]) == 0
    assert capsys.readouterr().out.startswith("valid")
    doc = json.loads((out / "solution.json").read_text())
    name = next(n for n in doc["columns"] if n.startswith("y_k0"))
    doc["columns"][name] = 1e9
    (out / "solution.json").write_text(json.dumps(doc))
    assert main(["solve", str(scen), "--validate-only", str(out / "solution.json")]) == 1


@pytest.mark.parametrize("scheme", ["sos", "rrs", "nss"])
def test_cli_baseline_solutions_validate(tmp_path, scheme, capsys):
    scen = tmp_path / "s.json"
    write_scenario(generate_scenario(GeneratorParams(slots=2), seed=1), scen)
    out = tmp_path / scheme
    assert main(["solve", str(scen), "--scheme", scheme, "--samples", "3", "--out", str(out)]) == 0
    assert main(["solve", str(scen), "--validate-only", str(out / "solution.json")]) == 0


def test_cli_compare_default(tmp_path, capsys):
    assert main(["compare", "--seed", "0", "--samples", "5", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "comparison.csv").read_text().splitlines()
    assert len(lines) == 5
    flags = [line.split(",")[9] for line in lines[2:]]
    assert flags == ["1", "1", "1"]


def test_cli_sweep(tmp_path, capsys):
    code = main(["sweep", "--variable", "user_pairs", "--values", "1,2", "--slots", "2",
                 "--schemes", "ps-egr,nss", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "summary.json").exists()


def test_cli_solve_lp(tmp_path, capsys):
    lp = tmp_path / "m.lp"
    lp.write_text("Maximize\n obj: 3 a + 2 b\nSubject To\n c: a + b <= 1\nBinaries\n a b\nEnd\n")
    out = tmp_path / "x.csv"
    assert main(["solve-lp", str(lp), "--out", str(out)]) == 0
    assert "objective 3" in capsys.readouterr().out
    assert out.read_text().splitlines()[1] == "a,1"


def test_cli_usage_errors(capsys):
    with pytest.raises(SystemExit) as e:
        main(["bogus"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["solve", "--no-such-flag"])
    assert e.value.code == 2
    assert main(["solve", "/nonexistent/file.json"]) == 1
