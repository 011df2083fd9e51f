"""End-to-end command line flows on temporary files."""

import dataclasses
import json
import subprocess

import numpy as np

from dphgnn.cli import main
from dphgnn.hypergraph import load_dataset
from dphgnn.train import RunConfig

SMALL = {"generator": {"kind": "two_community", "num_nodes": 20, "num_edges": 15}, "seed": 3}


def write_config(tmp_path, **overrides):
    base = dict(model="dphgnn", epochs=4, seed=1, dataset=SMALL)
    base.update(overrides)
    cfg = RunConfig(**base)
    cfg = dataclasses.replace(
        cfg,
        gnn=dataclasses.replace(cfg.gnn, hidden=8, dropout=0.0),
        taa=dataclasses.replace(cfg.taa, dropout=0.0),
        sib=dataclasses.replace(cfg.sib, dropout=0.0),
        dff=dataclasses.replace(cfg.dff, dropout=0.0),
    )
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg.to_dict()))
    return path


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_generate_dataset(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"kind": "two_community", "num_nodes": 24, "num_edges": 18}))
    out = tmp_path / "data.json"
    code, stdout, _ = run_cli(
        capsys, "generate", "--spec", str(spec), "--seed", "4", "--out", str(out)
    )
    assert code == 0
    summary = json.loads(stdout)
    assert summary["num_nodes"] == 24
    data = load_dataset(out)
    assert data.num_nodes == 24
    assert data.hypergraph.num_edges == 18


def test_generate_pair_file(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"kind": "non_iso_pair", "cycle_a": 3, "cycle_b": 3}))
    out = tmp_path / "pair.json"
    code, stdout, _ = run_cli(
        capsys, "generate", "--spec", str(spec), "--seed", "1", "--out", str(out)
    )
    assert code == 0
    assert json.loads(stdout)["isomorphic"] is False
    payload = json.loads(out.read_text())
    assert payload["a"]["num_nodes"] == 6
    assert payload["b"]["num_nodes"] == 6
    assert payload["isomorphic"] is False


def test_train_eval_chain(tmp_path, capsys):
    config = write_config(tmp_path, epochs=6)
    run_dir = tmp_path / "run"
    code, stdout, _ = run_cli(
        capsys, "train", "--config", str(config), "--out", str(run_dir)
    )
    assert code == 0
    report = json.loads(stdout)
    assert len(report["losses"]) == 6

    # regenerate the dataset to a file, then score the checkpoint on it
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(SMALL["generator"]))
    data_path = tmp_path / "data.json"
    run_cli(capsys, "generate", "--spec", str(spec), "--seed", "3", "--out", str(data_path))

    code, stdout, _ = run_cli(
        capsys,
        "eval",
        "--checkpoint", str(run_dir / "checkpoint.json"),
        "--data", str(data_path),
        "--mask", "test",
    )
    assert code == 0
    scored = json.loads(stdout)
    assert scored["mask"] == "test"
    assert scored["mean_accuracy"] == report["final_metrics"]["test"]["mean_accuracy"]


def test_iso_test_two_files(tmp_path, capsys):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    # two triangles against a hexagon: the motivating indistinguishable pair
    a.write_text(json.dumps({
        "num_nodes": 6,
        "hyperedges": [[0, 1], [1, 2], [0, 2], [3, 4], [4, 5], [3, 5]],
    }))
    b.write_text(json.dumps({
        "num_nodes": 6,
        "hyperedges": [[0, 1], [1, 2], [2, 3], [3, 4], [4, 5], [0, 5]],
    }))
    code, stdout, _ = run_cli(
        capsys, "iso-test", "--a", str(a), "--b", str(b), "--brute-force"
    )
    assert code == 0
    verdict = json.loads(stdout)
    assert verdict["verdict"] == "POSSIBLY_ISOMORPHIC"
    assert verdict["brute_force"] is False


def test_iso_test_pair_file(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"kind": "iso_pair", "num_nodes": 7, "num_edges": 5}))
    out = tmp_path / "pair.json"
    run_cli(capsys, "generate", "--spec", str(spec), "--seed", "2", "--out", str(out))
    code, stdout, _ = run_cli(capsys, "iso-test", "--a", str(out), "--brute-force")
    assert code == 0
    verdict = json.loads(stdout)
    assert verdict["verdict"] == "POSSIBLY_ISOMORPHIC"
    assert verdict["brute_force"] is True


def test_iso_test_distinguishable(tmp_path, capsys):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    a.write_text(json.dumps({"num_nodes": 3, "hyperedges": [[0, 1, 2]]}))
    b.write_text(json.dumps({"num_nodes": 3, "hyperedges": [[0, 1], [1, 2]]}))
    code, stdout, _ = run_cli(capsys, "iso-test", "--a", str(a), "--b", str(b))
    assert code == 0
    assert json.loads(stdout)["verdict"] == "DISTINGUISHED"


def test_ablate_writes_rows(tmp_path, capsys):
    config = write_config(tmp_path)
    out = tmp_path / "ablation.json"
    code, stdout, _ = run_cli(
        capsys, "ablate", "--config", str(config), "--out", str(out)
    )
    assert code == 0
    rows = json.loads(out.read_text())["rows"]
    assert [r["name"] for r in rows] == ["overall", "no_taa", "no_sib", "no_dff"]
    assert rows[1]["flags"]["use_taa"] is False


def test_iso_exp_smoke(tmp_path, capsys):
    config = write_config(tmp_path, dataset=None, epochs=2)
    code, stdout, _ = run_cli(
        capsys, "iso-exp", "--seed", "1", "--pairs", "4", "--config", str(config)
    )
    assert code == 0
    report = json.loads(stdout)
    assert report["num_pairs"] == 4
    assert report["verdicts"]["POSSIBLY_ISOMORPHIC"] == 4
    assert "test_accuracy_gap" in report


def test_errors_exit_code_two(tmp_path, capsys):
    code, _, err = run_cli(
        capsys, "train", "--config", str(tmp_path / "missing.json")
    )
    assert code == 2
    assert "error:" in err

    spec = tmp_path / "bad.json"
    spec.write_text(json.dumps({"kind": "mystery"}))
    code, _, err = run_cli(
        capsys, "generate", "--spec", str(spec), "--seed", "0",
        "--out", str(tmp_path / "x.json"),
    )
    assert code == 2
    assert "error:" in err


def test_console_script_help():
    proc = subprocess.run(
        ["dphgnn", "--help"], capture_output=True, text=True, timeout=60
    )
    assert proc.returncode == 0
    for name in ("generate", "train", "eval", "iso-test", "ablate", "iso-exp"):
        assert name in proc.stdout
