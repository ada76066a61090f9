import csv
import json
from pathlib import Path

import pytest
import yaml

from rarebench.cli import main, run
from rarebench.config import STAGES, RunConfig, derive_seed, load_config, save_config
from rarebench.errors import ConfigError

ROOT = Path(__file__).resolve().parents[1]

TAUS = [0.53, 0.54, 0.55, 0.56, 0.57, 0.58, 0.59]
Q_I = [0.0875, 0.09, 0.095, 0.0975, 0.1, 0.1025, 0.105, 0.1075]

WALK = {
    "seed": 5,
    "process": {"name": "walk", "params": {"p_up": 0.45, "floor": -4.0}},
    "basins": {"lambda_a": 0.0, "lambda_b": 8.0},
    "ladder": {"lambda_0": 0.0, "lambda_n": 8.0, "n": 2},
    "branch": {"m": 4, "n_seeds": 6},
    "ffs": {"response_name": "p_up", "values": [0.44, 0.46, 0.48]},
    "models": [{"kind": "knn"}, {"kind": "tree"}, {"kind": "mean", "params": {}},
               {"kind": "gbdt_leaf", "space": {"domains": {"eta": {"real": [0.05, 0.5], "log": True}},
                                               "fixed": {"n_estimators": 10}}}],
    "search": {"budget": 3, "k": 3},
    "deployment": {"n_sim": 4, "t_sim": 600.0, "call_freq": 5, "response_value": 0.48},
    "weights": {"count": 50},
}


def _write(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


# --------------------------------------------------------------------------
# configuration


@pytest.mark.parametrize("name", ["desk_exothermic.yaml", "polystyrene_unsafe.yaml"])
def test_shipped_configs_round_trip(name, tmp_path):
    cfg = load_config(ROOT / "configs" / name)
    for suffix in (".yaml", ".json"):
        save_config(cfg, tmp_path / f"c{suffix}")
        again = load_config(tmp_path / f"c{suffix}")
        assert again == cfg and again.hash() == cfg.hash()


def test_unknown_and_missing_keys_are_named():
    with pytest.raises(ConfigError, match="colour"):
        RunConfig.from_dict({"process": {"name": "walk", "colour": 1}})
    with pytest.raises(ConfigError, match="lambda_b"):
        RunConfig.from_dict({"basins": {"lambda_a": 1.0}})
    with pytest.raises(ConfigError, match="ladder"):
        RunConfig.from_dict({"ladder": {"values": []}})
    with pytest.raises(ConfigError, match="deployment"):
        RunConfig.from_dict({}).require("deployment")


def test_stage_seeds_are_distinct_and_stable():
    seeds = {s: derive_seed(7, s) for s in STAGES}
    assert len(set(seeds.values())) == len(STAGES)
    assert seeds == {s: derive_seed(7, s) for s in STAGES}
    assert derive_seed(8, "ffs") != seeds["ffs"]


# --------------------------------------------------------------------------
# simulate


def test_simulate_rows_and_byte_identical_rerun(tmp_path):
    data = {"seed": 3, "process": {"name": "exothermic", "dt": 0.01}, "simulate": {"t_sim": 2.0}}
    cfg = _write(tmp_path, data)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "trajectory.csv").read_bytes()
    assert a == (tmp_path / "b" / "trajectory.csv").read_bytes()
    assert len(a.decode().splitlines()) == 1 + 201
    manifest = json.loads((tmp_path / "a" / "manifest_simulate.json").read_text())
    assert manifest["seed"] == 3 and manifest["files"][0]["path"] == "trajectory.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "c"), "--seed", "4"]) == 0
    assert (tmp_path / "c" / "trajectory.csv").read_bytes() != a


def test_missing_section_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, {"process": {"name": "exothermic"}})
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert "simulate" in capsys.readouterr().err


def test_bad_config_files_exit_one(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("process: [unclosed")
    assert main(["simulate", "--config", str(bad)]) == 1
    assert main(["simulate", "--config", str(tmp_path / "missing.yaml")]) == 1
    empty = _write(tmp_path, {"process": {"name": "walk"}, "ladder": {"values": []}}, "e.yaml")
    assert main(["ffs", "--config", str(empty)]) == 1


def test_runtime_error_exit_two(tmp_path):
    data = {"process": {"name": "walk", "params": {"p_up": 0.0}}, "ladder": {"values": [0.0, 3.0]},
            "branch": {"m": 2, "n_seeds": 1}, "ffs": {"flux_max_steps": 1000}}
    assert main(["ffs", "--config", str(_write(tmp_path, data)), "--out", str(tmp_path / "o")]) == 2


# --------------------------------------------------------------------------
# ffs sweeps over the listed response-action values


@pytest.mark.parametrize("process,response,values,ladder", [
    ({"name": "exothermic", "noise_variance": 3.0, "dt": 0.01, "initial": "steady"}, "tau", TAUS,
     [830.0, 700.0, 400.0]),
    ({"name": "polystyrene", "noise_variance": 1.0, "dt": 0.001, "initial": "steady"}, "q_i", Q_I,
     [0.87, 0.9, 1.4]),
])
def test_ffs_sweep_summary_per_value(process, response, values, ladder, tmp_path):
    data = {"seed": 1, "process": process, "ladder": {"values": ladder}, "branch": {"m": 2, "n_seeds": 2},
            "ffs": {"response_name": response, "values": values, "burn_in_steps": 100}}
    res = run("ffs", RunConfig.from_dict(data), tmp_path, jobs=2)
    summary = json.loads((tmp_path / "ffs" / "summary.json").read_text())
    assert [s["response_value"] for s in summary] == values
    assert len(res["results"]) == len(values)


# --------------------------------------------------------------------------
# full pipeline on the walk


@pytest.fixture(scope="module")
def walk_run(tmp_path_factory):
    base = tmp_path_factory.mktemp("walk")
    cfg = _write(base, WALK)
    for cmd in ("bench", "rank"):
        assert main([cmd, "--config", str(cfg), "--out", str(base / "run"), "--jobs", "2"]) == 0
    return base, cfg


def test_bench_bundle_shape(walk_run):
    base, _ = walk_run
    out = base / "run"
    with open(out / "bench" / "metrics.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 5 and all(len(r) == 8 for r in rows)
    with open(out / "bench" / "ranking.csv") as fh:
        ranking = list(csv.DictReader(fh))
    assert {r["model"] for r in ranking} == {"knn", "tree", "mean", "gbdt_leaf"}
    manifest = json.loads((out / "manifest_bench.json").read_text())
    listed = {f["path"] for f in manifest["files"]}
    # upstream stages run by bench are covered by its manifest
    assert {"ffs/forest.csv", "dataset/train.csv", "bench/metrics_scaled.csv"} <= listed
    assert (out / "manifest_rank.json").exists()
    assert len(manifest["deployment_seeds"]) == 4
    assert set(manifest["timings"]) == {"knn", "tree", "mean", "gbdt_leaf"}
    assert manifest["timings"]["mean"]["t_hyper"] == 0.0
    assert (out / "global_ranking.csv").read_text().startswith("model,mean_rank")


def test_bench_rerun_is_bit_identical(walk_run, tmp_path):
    base, cfg = walk_run
    assert main(["bench", "--config", str(cfg), "--out", str(tmp_path), "--jobs", "1"]) == 0
    first, second = base / "run", tmp_path
    same = ["ffs/forest.csv", "ffs/summary.json", "dataset/train.csv", "dataset/test.csv",
            "bench/results.json", "bench/models/knn.json", "bench/models/gbdt_leaf.json",
            "bench/episodes/knn.csv", "bench/episodes/gbdt_leaf.csv"]
    for rel in same:
        assert (first / rel).read_bytes() == (second / rel).read_bytes(), rel
    assert _trials_without_time(first / "tune/gbdt_leaf_trials.csv") == \
        _trials_without_time(second / "tune/gbdt_leaf_trials.csv")


def _trials_without_time(path):
    with open(path) as fh:
        return [(r["trial"], r["params_json"], r["mean_rmse"]) for r in csv.DictReader(fh)]


def test_rank_requires_metrics(tmp_path):
    data = {"weights": {"count": 5, "reports": [str(tmp_path / "nowhere")]}}
    assert main(["rank", "--config", str(_write(tmp_path, data)), "--out", str(tmp_path)]) == 1
