import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from monas.cli import main
from oracles import naive_peel


def write_config(tmp_path, name="cfg.json", **over):
    cfg = {
        "benchmark": {"name": "zdt1", "params": {"d": 4}},
        "method": {"name": "random", "params": {}},
        "seed": 0,
        "stop": {"max_evaluations": 10},
    }
    cfg.update(over)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def run_cli(*args):
    return main([str(a) for a in args])


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_writes_consistent_artifacts(tmp_path):
    out = tmp_path / "run"
    assert run_cli("run", write_config(tmp_path), "--out", out) == 0
    rows = read_rows(out / "history.csv")
    assert len(rows) == 10
    assert list(rows[0])[:5] == ["eval_id", "budget", "wall_time_s", "obj_0", "obj_1"]
    hv = [float(r["hypervolume"]) for r in read_rows(out / "hypervolume.csv")]
    assert len(hv) == 10 and all(b >= a for a, b in zip(hv, hv[1:]))
    echo = json.loads((out / "config.json").read_text())
    assert echo["method"]["name"] == "random" and echo["seed"] == 0


def test_same_seed_gives_identical_bytes(tmp_path):
    cfg = write_config(tmp_path, method={"name": "emoash", "params": {"fe_total": 12, "mu": 4, "n_sh": 2}})
    run_cli("run", cfg, "--out", tmp_path / "a")
    run_cli("run", cfg, "--out", tmp_path / "b")
    run_cli("run", cfg, "--out", tmp_path / "c", "--workers", 4)
    a = (tmp_path / "a" / "history.csv").read_bytes()
    assert a == (tmp_path / "b" / "history.csv").read_bytes() == (tmp_path / "c" / "history.csv").read_bytes()


def test_seed_override_changes_run(tmp_path):
    cfg = write_config(tmp_path)
    run_cli("run", cfg, "--out", tmp_path / "a")
    run_cli("run", cfg, "--out", tmp_path / "b", "--seed", 1)
    assert (tmp_path / "a" / "history.csv").read_bytes() != (tmp_path / "b" / "history.csv").read_bytes()
    assert json.loads((tmp_path / "b" / "config.json").read_text())["seed"] == 1


def rederive_front(history_csv):
    """Front of the highest-budget row per configuration, straight from the CSV."""
    latest = {}
    for row in read_rows(history_csv):
        key, budget = row["config_json"], float(row["budget"])
        if key not in latest or budget >= float(latest[key]["budget"]):
            latest[key] = row
    rows = sorted(latest.values(), key=lambda r: int(r["eval_id"]))
    Y = np.array([[float(r["obj_0"]), float(r["obj_1"])] for r in rows])
    return {int(rows[i]["eval_id"]) for i in naive_peel(Y)[0]}, rows


def test_pareto_json_matches_rederivation(tmp_path):
    cfg = write_config(tmp_path, method={"name": "mobohb", "params": {"n_samples": 8}},
                       stop={"max_evaluations": 40})
    out = tmp_path / "run"
    run_cli("run", cfg, "--out", out)
    expected, rows = rederive_front(out / "history.csv")
    front = json.loads((out / "pareto.json").read_text())
    assert {p["eval_id"] for p in front} == expected
    by_id = {int(r["eval_id"]): r for r in rows}
    for p in front:
        assert p["config"] == json.loads(by_id[p["eval_id"]]["config_json"])


def test_compare_single_and_identical_runs(tmp_path):
    cfg = write_config(tmp_path)
    run_cli("run", cfg, "--out", tmp_path / "a")
    run_cli("run", cfg, "--out", tmp_path / "b")
    final = float(read_rows(tmp_path / "a" / "hypervolume.csv")[-1]["hypervolume"])

    assert run_cli("compare", tmp_path / "a", "--out", tmp_path / "s1") == 0
    (row,) = read_rows(tmp_path / "s1" / "summary.csv")
    assert float(row["stderr"]) == 0.0 and int(row["n_seeds"]) == 1

    run_cli("compare", tmp_path / "a", tmp_path / "b", "--out", tmp_path / "s2")
    (row,) = read_rows(tmp_path / "s2" / "summary.csv")
    assert float(row["mean_hypervolume"]) == final and float(row["stderr"]) == 0.0


def test_compare_orders_methods_and_combines_fronts(tmp_path):
    dirs = []
    for method, params in (("random", {}), ("emoash", {"fe_total": 100, "mu": 10, "n_sh": 2})):
        cfg = write_config(tmp_path, name=f"{method}.json", method={"name": method, "params": params},
                           stop={"max_evaluations": 100})
        for seed in range(5):
            d = tmp_path / f"{method}{seed}"
            run_cli("run", cfg, "--out", d, "--seed", seed)
            dirs.append(d)
    run_cli("compare", *dirs, "--out", tmp_path / "cmp")
    summary = read_rows(tmp_path / "cmp" / "summary.csv")
    assert [r["method"] for r in summary] == ["emoash", "random"]

    combined = json.loads((tmp_path / "cmp" / "combined_pareto.json").read_text())
    pooled = np.array([p["objectives"] for p in combined["random"]])
    for d in dirs[:5]:
        for p in json.loads((d / "pareto.json").read_text()):
            y = np.array(p["objectives"])
            # every per-seed front point is in the union front or beaten by it
            assert np.any(np.all(pooled <= y, axis=1))

    curves = read_rows(tmp_path / "cmp" / "hv_curves.csv")
    assert {r["axis"] for r in curves} == {"evaluations", "wall_time_s"}


def test_compare_is_idempotent(tmp_path):
    cfg = write_config(tmp_path)
    run_cli("run", cfg, "--out", tmp_path / "a")
    run_cli("compare", tmp_path / "a", "--out", tmp_path / "s1")
    run_cli("compare", tmp_path / "a", "--out", tmp_path / "s2")
    for name in ("summary.csv", "combined_pareto.json", "hv_curves.csv"):
        assert (tmp_path / "s1" / name).read_bytes() == (tmp_path / "s2" / name).read_bytes()


def test_compare_rejects_mixed_benchmarks(tmp_path, capsys):
    run_cli("run", write_config(tmp_path), "--out", tmp_path / "a")
    other = write_config(tmp_path, name="d.json", benchmark={"name": "zdt1", "params": {"d": 3}})
    run_cli("run", other, "--out", tmp_path / "b")
    assert run_cli("compare", tmp_path / "a", tmp_path / "b", "--out", tmp_path / "s") == 2
    assert "different benchmarks" in capsys.readouterr().err


@pytest.mark.parametrize("over, message", [
    ({"method": {"name": "simplex"}}, "unknown method"),
    ({"benchmark": {"name": "cifar"}}, "unknown benchmark"),
    ({"stop": {}}, "stop criterion"),
])
def test_bad_configs_exit_nonzero(tmp_path, capsys, over, message):
    assert run_cli("run", write_config(tmp_path, **over), "--out", tmp_path / "x") == 2
    assert message in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert run_cli("run", tmp_path / "nope.json") == 2
    assert "cannot read config" in capsys.readouterr().err


def test_output_root_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("MOBO_OUT", str(tmp_path / "root"))
    assert run_cli("run", write_config(tmp_path)) == 0
    assert (tmp_path / "root" / "zdt1_random_seed0" / "history.csv").exists()


def test_listing_commands(capsys):
    assert run_cli("spaces", "list") == 0
    assert "cnn" in capsys.readouterr().out
    assert run_cli("benchmarks", "list") == 0
    out = capsys.readouterr().out
    assert "nas_hpo_proxy" in out and "tiny_mlp" in out


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "monas.cli", "run", str(write_config(tmp_path)),
                           "--out", str(tmp_path / "r")], capture_output=True, text=True)
    assert proc.returncode == 0 and "10 evaluations" in proc.stdout
