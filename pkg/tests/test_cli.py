import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from qudit_photonics import circuits, cli, io


def run(*argv):
    return cli.main([str(a) for a in argv])


def load(path):
    return json.loads(path.read_text())


def test_verify_presets(capsys):
    assert run("verify", "--gate", "X4") == 0
    assert "MATCH" in capsys.readouterr().out
    assert run("verify", "--gate", "Z4_dag") == 0


def test_verify_writes_report(tmp_path):
    assert run("verify", "--gate", "CX4_sq", "--out", tmp_path) == 0
    doc = load(tmp_path / "verify_CX4_sq.json")
    io.validate(doc)
    assert doc["match"] and doc["max_deviation"] <= 1e-10


def test_verify_broken_netlist(tmp_path, capsys):
    doc = circuits.netlist_to_dict(circuits.paper_circuit("X4"))
    for stage in doc["stages"]:
        comps = [c for c in stage["components"] if c["kind"] == "PBS"]
        if comps:
            stage["components"].remove(comps[0])
            break
    doc["stages"] = [s for s in doc["stages"] if s["components"]]
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(doc))
    assert run("verify", "--netlist", path) == 1
    assert "MISMATCH" in capsys.readouterr().out


def test_verify_parse_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"modes": ["a"],\n  oops}')
    assert run("verify", "--netlist", bad) == 2
    assert "bad.json:2:3" in capsys.readouterr().err
    shape = tmp_path / "shape.json"
    shape.write_text(json.dumps({"modes": ["a", "b"], "stages": [{"components": [{"kind": "PBS", "ports": ["a"]}]}]}))
    assert run("verify", "--netlist", shape, "--target", "X4") == 2
    assert run("verify") == 2
    assert run("verify", "--gate", "X9") == 2


def test_truth_table_ideal_is_one_hot(tmp_path):
    assert run("truth-table", "--gate", "X4", "--ideal", "--out", tmp_path) == 0
    rows = list(csv.reader((tmp_path / "X4_truth_table.csv").open()))
    assert rows[0] == ["input", "a", "b", "c", "d"]
    probs = np.array([[float(x) for x in r[1:]] for r in rows[1:]])
    assert probs.shape == (4, 4)
    assert np.array_equal(probs, np.roll(np.eye(4), 1, axis=1))
    io.validate(load(tmp_path / "X4_truth_table.json"))


@pytest.mark.parametrize("gate, lo, hi", [("CX4", 0.990, 0.998), ("X4_sq", 0.990, 0.999)])
def test_truth_table_default_noise_bands(tmp_path, gate, lo, hi):
    assert run("truth-table", "--gate", gate, "--noise", "default", "--seed", 7, "--out", tmp_path) == 0
    doc = load(tmp_path / f"{gate}_truth_table.json")
    assert lo <= doc["average_efficiency"] <= hi
    assert doc["seed"] == 7


def test_sampled_run_requires_seed(tmp_path, capsys):
    assert run("truth-table", "--gate", "X4", "--noise", "default", "--out", tmp_path) == 2
    assert "--seed" in capsys.readouterr().err


def test_ideal_excludes_noise(tmp_path):
    assert run("truth-table", "--gate", "X4", "--ideal", "--noise", "zero", "--out", tmp_path) == 2


def test_tomography_commands(tmp_path):
    assert run("tomography", "--gate", "Z4", "--ideal", "--out", tmp_path / "i") == 0
    doc = load(tmp_path / "i" / "Z4_tomography.json")
    assert abs(doc["fidelity_vs_ideal"] - 1) < 1e-9
    for f in ("Z4_density_real.csv", "Z4_density_imag.csv", "Z4_phases.csv"):
        assert (tmp_path / "i" / f).is_file()
    for gate in ("Z4", "Z4_sq"):
        assert run("tomography", "--gate", gate, "--noise", "default", "--seed", 3, "--out", tmp_path / "n") == 0
        assert 0.990 <= load(tmp_path / "n" / f"{gate}_tomography.json")["fidelity_vs_ideal"] <= 1.0


def test_resources_command(tmp_path):
    assert run("resources", "--d-max", 4, "--out", tmp_path) == 0
    rows = {r["d"]: r for r in csv.DictReader((tmp_path / "resources.csv").open())}
    assert rows["4"]["paper_x_pbs"] == "3" and rows["4"]["walk_pbs"] == "15" and rows["4"]["walk_hwp"] == "30"
    assert run("resources", "--d-max", 2, "--out", tmp_path) == 0
    rows = list(csv.DictReader((tmp_path / "resources.csv").open()))
    assert [r["paper_x_pbs"] for r in rows] == ["1"]
    assert run("resources", "--d-max", 1, "--out", tmp_path) == 2


def test_format_selection(tmp_path):
    assert run("truth-table", "--gate", "Z4", "--ideal", "--format", "csv", "--out", tmp_path) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["Z4_truth_table.csv"]


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.ENV_OUT, str(tmp_path / "env"))
    assert run("truth-table", "--gate", "X4", "--ideal") == 0
    assert (tmp_path / "env" / "X4_truth_table.json").is_file()
    assert run("truth-table", "--gate", "X4", "--ideal", "--out", tmp_path / "flag") == 0
    assert (tmp_path / "flag" / "X4_truth_table.json").is_file()


def test_config_file(tmp_path, monkeypatch):
    monkeypatch.delenv(cli.ENV_OUT, raising=False)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"gate": "X4_dag", "seed": 5, "out": str(tmp_path / "c")}))
    assert run("--config", cfg, "truth-table") == 0
    assert load(tmp_path / "c" / "X4_dag_truth_table.json")["seed"] == 5
    cfg.write_text(json.dumps({"gate": "X4", "colour": "red"}))
    assert run("--config", cfg, "truth-table") == 2


def test_noise_file(tmp_path):
    noise = tmp_path / "noise.json"
    noise.write_text(json.dumps({"pbs_extinction": 0.01}))
    assert run("truth-table", "--gate", "X4", "--noise", noise, "--seed", 1, "--out", tmp_path) == 0
    assert load(tmp_path / "X4_truth_table.json")["noise"]["pbs_extinction"] == 0.01
    noise.write_text(json.dumps({"pbs_extinction": 0.7}))
    assert run("truth-table", "--gate", "X4", "--noise", noise, "--seed", 1, "--out", tmp_path) == 2


def test_ideal_and_zero_noise_agree_at_a_million_photons(tmp_path):
    assert run("truth-table", "--gate", "CX4", "--ideal", "--out", tmp_path / "i") == 0
    assert run("truth-table", "--gate", "CX4", "--noise", "zero", "--seed", 11, "--rate", 100000,
               "--out", tmp_path / "z") == 0
    exact = np.array(load(tmp_path / "i" / "CX4_truth_table.json")["probabilities"])
    doc = load(tmp_path / "z" / "CX4_truth_table.json")
    sampled = np.array(doc["probabilities"])
    n = np.array(doc["counts"]).sum(axis=1, keepdims=True)
    assert n.min() >= 990000
    assert np.all(np.abs(sampled - exact) <= 4 * np.sqrt(exact * (1 - exact) / n) + 1e-12)


def test_counts_jsonl(tmp_path):
    for protocol, n in (("truth-table", 8), ("tomography", 15)):
        assert run("counts", "--gate", "CX4", "--seed", 2, "--protocol", protocol, "--out", tmp_path) == 0
        lines = (tmp_path / f"CX4_{protocol}_counts.jsonl").read_text().splitlines()
        assert len(lines) == n
        for line in lines:
            io.validate(json.loads(line), "count_record")


def test_netlist_export_and_compile(tmp_path, capsys):
    path = tmp_path / "z4.json"
    assert run("netlist", "export", path, "--gate", "Z4") == 0
    assert run("verify", "--netlist", path) == 0
    capsys.readouterr()
    assert run("netlist", "compile", path) == 0
    doc = json.loads(capsys.readouterr().out)
    io.validate(doc)
    u = np.array(doc["real"]) + 1j * np.array(doc["imag"])
    assert np.allclose(u, circuits.compile_netlist(circuits.paper_circuit("Z4")).matrix)
    assert run("netlist", "compile") == 2


def test_netlist_export_stdout_is_sorted_json(capsys):
    assert run("netlist", "export", "--gate", "X4") == 0
    text = capsys.readouterr().out
    assert text == io.dumps(json.loads(text))


def test_commands_are_byte_deterministic(tmp_path):
    for d in ("a", "b"):
        assert run("tomography", "--gate", "CX4_dag", "--seed", 9, "--out", tmp_path / d) == 0
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_reproduce_bundle_layout(tmp_path):
    assert run("reproduce-paper", "--out", tmp_path) == 0
    manifest = load(tmp_path / "manifest.json")
    io.validate(manifest)
    assert manifest["seed"] == cli.REPRODUCE_SEED
    assert {e["path"].split("/")[0] for e in manifest["files"]} == set(cli.BUNDLE)
    summary = load(tmp_path / "fidelities" / "summary.json")
    assert all(v["fidelity"] > summary["classical_bound"] for v in summary["gates"].values())
    assert b"\r" not in (tmp_path / "truth_tables_x" / "efficiencies.csv").read_bytes()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "qudit_photonics", "verify", "--gate", "CX4"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "MATCH" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "qudit_photonics", "bogus"], capture_output=True, text=True)
    assert proc.returncode == 2
