"""Command-line driver: simulate, ffs, dataset, tune, bench and rank.

Every command reads one config file, writes into ``--out`` and leaves a
``manifest_<command>.json`` recording the config hash, seed, library versions
and the files written. Exit codes: 0 success, 1 configuration error,
2 runtime error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .alarms import AlarmSpec, DeploymentConfig, alarm_metrics, run_deployment, write_episode_log
from .benchmark import (MetricVector, WeightBounds, global_ranking, read_metric_table, rmse,
                        sample_weight_vectors, write_global_ranking, write_report)
from .config import RunConfig, load_config
from .dataset import (FilterConfig, SplitConfig, assemble, read_csv, read_forest_csv, train_test_split,
                      write_csv)
from .errors import ConfigError
from .ffs import BranchConfig, InterfaceLadder, run_sweep, run_bgffs, write_forest_csv, write_summary_json
from .models.base import REGISTRY
from .models.base import fit as fit_model
from .process import BasinSpec, ProcessState, SimConfig, build_model
from .tuning import HyperparamSpace, SearchConfig, default_space, search, write_trials_csv


# --------------------------------------------------------------------------
# builders


def build_process(cfg: RunConfig):
    cfg.require("process")
    p = cfg.process
    return build_model(p.name, p.params, p.noise_variance, p.dt)


def initial_state(cfg: RunConfig, model) -> ProcessState:
    init = cfg.process.initial
    if isinstance(init, (list, tuple)):
        x = np.array(init, dtype=np.float64)
        if x.shape != (len(model.state_names),):
            raise ConfigError(f"initial state needs {len(model.state_names)} entries")
        return ProcessState(x)
    if init == "default":
        return model.initial_state()
    if init == "steady":
        if not hasattr(model, "steady_state"):
            raise ConfigError(f"process {cfg.process.name!r} has no steady state")
        return model.steady_state()
    raise ConfigError(f"process.initial must be 'default', 'steady' or a state vector, got {init!r}")


def build_ladder(cfg: RunConfig) -> InterfaceLadder:
    cfg.require("ladder")
    lad = cfg.ladder
    if lad.values is not None:
        return InterfaceLadder(tuple(float(v) for v in lad.values))
    return InterfaceLadder.uniform(lad.lambda_0, lad.lambda_n, lad.n)


def build_branch(cfg: RunConfig, n: int) -> BranchConfig:
    cfg.require("branch")
    b = cfg.branch
    if isinstance(b.m, (list, tuple)):
        return BranchConfig(tuple(int(v) for v in b.m), b.n_seeds, b.max_steps)
    return BranchConfig.constant(int(b.m), n, n_seeds=b.n_seeds, max_steps=b.max_steps)


def build_basins(cfg: RunConfig) -> BasinSpec:
    cfg.require("basins")
    return BasinSpec(cfg.basins.lambda_a, cfg.basins.lambda_b)


# --------------------------------------------------------------------------
# manifest


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def versions() -> dict:
    import numba
    import scipy

    return {"rarebench": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__}


def write_manifest(cfg: RunConfig, out: Path, command: str, files, extra: dict | None = None) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for f in sorted({Path(f) for f in files}):
        if f.exists():
            entries.append({"path": str(f.relative_to(out)), "sha256": _sha256(f)})
    manifest = {"command": command, "config_hash": cfg.hash(), "seed": cfg.seed, "versions": versions(),
                "config": cfg.to_dict(), "files": entries, **(extra or {})}
    path = out / f"manifest_{command}.json"
    path.write_text(json.dumps(manifest, indent=2, default=str))
    return path


# --------------------------------------------------------------------------
# commands


def cmd_simulate(cfg: RunConfig, out: Path, jobs: int = 1) -> dict:
    cfg.require("process", "simulate")
    model = build_process(cfg)
    sim = SimConfig(model.dt, cfg.simulate.t_sim, cfg.stage_seed("simulate"), cfg.simulate.stop_on_basin)
    basins = build_basins(cfg) if cfg.simulate.stop_on_basin else None
    traj = model.simulate(initial_state(cfg, model), sim, basins)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "trajectory.csv"
    traj.to_csv(path)
    return {"files": [path], "rows": len(traj)}


def _ffs_paths(out: Path):
    d = out / "ffs"
    return d / "forest.csv", d / "summary.json"


def cmd_ffs(cfg: RunConfig, out: Path, jobs: int = 1) -> dict:
    cfg.require("process", "ladder", "branch", "ffs")
    model = build_process(cfg)
    ladder = build_ladder(cfg)
    branch = build_branch(cfg, ladder.n)
    f = cfg.ffs
    kw = dict(initial=initial_state(cfg, model), burn_in_steps=f.burn_in_steps,
              flux_max_steps=f.flux_max_steps, jobs=jobs)
    seed = cfg.stage_seed("ffs")
    if f.response_name:
        if not f.values:
            raise ConfigError("ffs.values must list the response-action values")
        results = run_sweep(model, ladder, branch, seed, f.response_name, f.values, **kw)
    else:
        results = [run_bgffs(model, ladder, branch, seed, **kw)]
    forest_path, summary_path = _ffs_paths(out)
    forest_path.parent.mkdir(parents=True, exist_ok=True)
    write_forest_csv(results, forest_path)
    write_summary_json(results, summary_path)
    return {"files": [forest_path, summary_path], "results": results}


def _dataset_paths(out: Path) -> dict:
    d = out / "dataset"
    return {k: (d / f"{k}.csv", d / f"{k}.schema.json") for k in ("dataset", "train", "test")}


def cmd_dataset(cfg: RunConfig, out: Path, jobs: int = 1) -> dict:
    cfg.require("process", "ffs")
    model = build_process(cfg)
    forest_path, _ = _ffs_paths(out)
    files = []
    if not forest_path.exists():
        files += cmd_ffs(cfg, out, jobs)["files"]
    response = cfg.ffs.response_name
    blocks = read_forest_csv(forest_path, model.state_names, response)
    fc = FilterConfig(cfg.filter.c if cfg.filter else 2.0)
    data = assemble(blocks, model.feature_names, fc, cfg.ffs.values or None, cfg.process.name)
    frac = cfg.split.train_fraction if cfg.split else 0.7
    train, test = train_test_split(data, SplitConfig(frac, cfg.stage_seed("split")))
    paths = _dataset_paths(out)
    paths["dataset"][0].parent.mkdir(parents=True, exist_ok=True)
    for name, part in (("dataset", data), ("train", train), ("test", test)):
        write_csv(part, *paths[name])
        files += list(paths[name])
    return {"files": files, "data": data, "train": train, "test": test}


def _load_split(cfg: RunConfig, out: Path, jobs: int):
    paths = _dataset_paths(out)
    files = []
    if not paths["train"][0].exists():
        files = cmd_dataset(cfg, out, jobs)["files"]
    return read_csv(*paths["train"]), read_csv(*paths["test"]), files


def _model_plan(cfg: RunConfig, section):
    """Return ``(space or None, params)`` for a model section."""
    if section.kind not in REGISTRY:
        raise ConfigError(f"unknown model kind {section.kind!r}; known: {sorted(REGISTRY)}")
    fixed = dict(section.params or {})
    if "seed" in REGISTRY[section.kind].defaults and "seed" not in fixed:
        fixed["seed"] = cfg.stage_seed("model")
    if section.space is not None:
        space = HyperparamSpace.from_dict(section.space)
        return HyperparamSpace(space.domains, {**fixed, **space.fixed}), fixed
    if section.params is not None:
        return None, fixed
    space = default_space(section.kind)
    return HyperparamSpace(space.domains, {**fixed, **space.fixed}), fixed


def _search_config(cfg: RunConfig, jobs: int) -> SearchConfig:
    s = cfg.search
    if s is None:
        return SearchConfig(seed=cfg.stage_seed("search"), jobs=jobs)
    return SearchConfig(s.budget, s.sampler, s.k, cfg.stage_seed("search"), s.grid_levels, jobs)


def _tune_one(cfg, section, train, out: Path, jobs: int):
    space, params = _model_plan(cfg, section)
    if space is None:
        return params, 0.0, []
    res = search(section.kind, space, train, _search_config(cfg, jobs))
    path = out / "tune" / f"{section.kind}_trials.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_trials_csv(res, path)
    return res.best_params, res.t_hyper, [path]


def cmd_tune(cfg: RunConfig, out: Path, jobs: int = 1) -> dict:
    cfg.require("models")
    train, _, files = _load_split(cfg, out, jobs)
    best, timings = {}, {}
    for section in cfg.models:
        params, t_hyper, written = _tune_one(cfg, section, train, out, jobs)
        best[section.kind] = params
        timings[section.kind] = t_hyper
        files += written
    path = out / "tune" / "best_params.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(best, indent=2, sort_keys=True))
    return {"files": [*files, path], "best": best, "timings": {"t_hyper": timings}}


def _deployment(cfg: RunConfig, model, jobs: int) -> DeploymentConfig:
    cfg.require("deployment")
    d = cfg.deployment
    value = d.response_value
    name = cfg.ffs.response_name if cfg.ffs else None
    if name and value is None:
        value = cfg.ffs.values[0]
    init = initial_state(cfg, model).x
    dep = DeploymentConfig(d.n_sim, d.t_sim, d.call_freq, tuple(d.seeds), name, value, tuple(init), jobs)
    if not dep.seeds:
        dep.seeds = tuple(dep.seed_list(cfg.stage_seed("deploy")))
    return dep


def _bench_one(cfg, section, train, test, process, basins, dep, spec, out: Path, jobs: int) -> dict:
    kind = section.kind
    params, t_hyper, files = _tune_one(cfg, section, train, out, jobs)
    t0 = time.perf_counter()
    handle = fit_model(kind, params, train)
    t_train = time.perf_counter() - t0
    t0 = time.perf_counter()
    pred = handle.predict(test.X)
    t_test = time.perf_counter() - t0
    err = rmse(pred, test.y)
    model_path = out / "bench" / "models" / f"{kind}.json"
    model_path.parent.mkdir(parents=True, exist_ok=True)
    handle.save(model_path)
    result = run_deployment(handle, process, basins, dep, spec)
    am = alarm_metrics(result, spec)
    ep_path = out / "bench" / "episodes" / f"{kind}.csv"
    ep_path.parent.mkdir(parents=True, exist_ok=True)
    write_episode_log(result.episodes, ep_path)
    alarm_path = out / "bench" / "alarms" / f"{kind}.json"
    alarm_path.parent.mkdir(parents=True, exist_ok=True)
    summary = {"kind": kind, "params": handle.params, "rmse": err, "n_alarms": am.n_alarms,
               "n_escalated": am.n_escalated, "p_measured": am.p_measured, "p_theoretical": am.p_theoretical,
               "delta_p": am.delta_p, "total_alarms": am.total_alarms, "n_diverged": am.n_diverged}
    alarm_path.write_text(json.dumps(summary, indent=2, sort_keys=True))
    metrics = MetricVector(err, t_hyper, t_train, t_test, am.t_deploy, am.delta_p, am.total_alarms)
    return {"metrics": metrics, "summary": summary, "files": [*files, model_path, ep_path, alarm_path],
            "timings": {"t_hyper": t_hyper, "t_train": t_train, "t_test": t_test, "t_deploy": am.t_deploy}}


def cmd_bench(cfg: RunConfig, out: Path, jobs: int = 1) -> dict:
    cfg.require("process", "basins", "models", "deployment")
    train, test, files = _load_split(cfg, out, jobs)
    process = build_process(cfg)
    basins = build_basins(cfg)
    dep = _deployment(cfg, process, jobs)
    spec = AlarmSpec(tuple(cfg.alarms.thresholds) if cfg.alarms else (0.2, 0.5))
    table, summaries, timings, failures = {}, {}, {}, {}
    for section in cfg.models:
        try:
            r = _bench_one(cfg, section, train, test, process, basins, dep, spec, out, jobs)
        except ConfigError:
            raise
        except Exception as exc:  # noqa: BLE001 - a failing model is excluded, not fatal
            warnings.warn(f"model {section.kind} failed and is excluded: {exc}", stacklevel=2)
            failures[section.kind] = f"{type(exc).__name__}: {exc}"
            continue
        table[section.kind] = r["metrics"]
        summaries[section.kind] = r["summary"]
        timings[section.kind] = r["timings"]
        files += r["files"]
    if not table:
        raise RuntimeError("every model failed")
    bench = out / "bench"
    ranks = write_report(table, bench)
    files += [bench / n for n in ("metrics.csv", "metrics_scaled.csv", "costs.csv", "ranking.csv")]
    results_path = bench / "results.json"
    results_path.write_text(json.dumps({"models": summaries, "failures": failures,
                                        "deployment_seeds": list(dep.seeds)}, indent=2, sort_keys=True))
    timing_path = bench / "timings.json"
    timing_path.write_text(json.dumps(timings, indent=2, sort_keys=True))
    files += [results_path, timing_path]
    return {"files": files, "table": table, "ranks": ranks, "failures": failures,
            "timings": timings, "deployment_seeds": list(dep.seeds)}


def cmd_rank(cfg: RunConfig, out: Path, jobs: int = 1) -> dict:
    w = cfg.weights
    reports = [Path(p) for p in (w.reports if w and w.reports else [out / "bench"])]
    tables = {}
    for r in reports:
        path = r / "metrics.csv" if r.is_dir() else r
        if not path.exists():
            raise ConfigError(f"no metrics table at {path}")
        tables[str(r)] = read_metric_table(path)
    bounds = WeightBounds.alarm_cap(w.alarm_cap) if w else WeightBounds()
    weights = sample_weight_vectors(bounds, w.count if w else 500, cfg.stage_seed("weights"))
    ranking = global_ranking(tables, weights)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "global_ranking.csv"
    write_global_ranking(ranking, path)
    wpath = out / "weights.csv"
    np.savetxt(wpath, np.array([v.a for v in weights]), delimiter=",", header="a1,a2,a3,a4,a5,a6,a7",
               comments="", fmt="%.17g")
    return {"files": [path, wpath], "ranking": ranking}


COMMANDS = {"simulate": cmd_simulate, "ffs": cmd_ffs, "dataset": cmd_dataset, "tune": cmd_tune,
            "bench": cmd_bench, "rank": cmd_rank}


def run(command: str, cfg: RunConfig, out: Path, jobs: int = 1) -> dict:
    res = COMMANDS[command](cfg, out, jobs)
    extra = {}
    for key in ("timings", "deployment_seeds", "failures"):
        if key in res:
            extra[key] = res[key]
    res["manifest"] = write_manifest(cfg, out, command, res["files"], extra)
    return res


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="rarebench", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="YAML or JSON run configuration")
    ap.add_argument("--seed", type=int, default=None, help="override the master seed")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes")
    ap.add_argument("--out", default=None, help="output directory (overrides config 'out')")
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            cfg.seed = args.seed
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        out = Path(args.out if args.out is not None else cfg.out)
        res = run(args.command, cfg, out, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(f"{args.command}: wrote {len(res['files'])} file(s) to {out}; manifest {res['manifest'].name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
