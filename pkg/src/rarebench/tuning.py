"""Hyperparameter search scored by k-fold cross-validated RMSE.

Candidates come from a seeded sampler (random by default, or a grid). Every
candidate is trained on k-1 folds and scored on the held-out fold, k times;
the candidate with the lowest mean validation RMSE wins, earliest trial first
on ties. Wall-clock time around the whole search is reported as ``t_hyper``.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .benchmark import rmse
from .errors import ConfigError
from .models.base import fit as fit_model


@dataclass(frozen=True)
class IntRange:
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ConfigError(f"empty integer range [{self.lo}, {self.hi}]")

    def sample(self, rng):
        return int(rng.integers(self.lo, self.hi + 1))

    def grid(self, levels):
        return sorted({int(round(v)) for v in np.linspace(self.lo, self.hi, levels)})


@dataclass(frozen=True)
class RealRange:
    lo: float
    hi: float
    log: bool = False

    def __post_init__(self):
        if self.lo > self.hi:
            raise ConfigError(f"empty real range [{self.lo}, {self.hi}]")
        if self.log and self.lo <= 0:
            raise ConfigError("log-scale range needs a positive lower bound")

    def sample(self, rng):
        if self.log:
            return float(math.exp(rng.uniform(math.log(self.lo), math.log(self.hi))))
        return float(rng.uniform(self.lo, self.hi))

    def grid(self, levels):
        if self.log:
            return [float(v) for v in np.geomspace(self.lo, self.hi, levels)]
        return [float(v) for v in np.linspace(self.lo, self.hi, levels)]


@dataclass(frozen=True)
class Categorical:
    values: tuple

    def __post_init__(self):
        if len(self.values) == 0:
            raise ConfigError("empty categorical set")

    def sample(self, rng):
        return _plain(self.values[int(rng.integers(len(self.values)))])

    def grid(self, levels):
        return [_plain(v) for v in self.values]


def _plain(v):
    if isinstance(v, (list, tuple)):
        return [_plain(u) for u in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


@dataclass
class HyperparamSpace:
    """Named domains plus fixed settings merged into every candidate."""

    domains: dict
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.domains and not self.fixed:
            raise ConfigError("hyperparameter space is empty")

    def sample(self, rng) -> dict:
        return {**self.fixed, **{k: d.sample(rng) for k, d in self.domains.items()}}

    def grid(self, levels: int = 3) -> list:
        names = list(self.domains)
        axes = [self.domains[k].grid(levels) for k in names]
        return [{**self.fixed, **dict(zip(names, combo))} for combo in itertools.product(*axes)]

    def to_dict(self) -> dict:
        out = {}
        for k, d in self.domains.items():
            if isinstance(d, IntRange):
                out[k] = {"int": [d.lo, d.hi]}
            elif isinstance(d, RealRange):
                out[k] = {"real": [d.lo, d.hi], "log": d.log}
            else:
                out[k] = {"choice": [_plain(v) for v in d.values]}
        return {"domains": out, "fixed": dict(self.fixed)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "HyperparamSpace":
        domains = {}
        for k, spec in (d.get("domains") or {}).items():
            if "int" in spec:
                domains[k] = IntRange(*spec["int"])
            elif "real" in spec:
                domains[k] = RealRange(*spec["real"], log=bool(spec.get("log", False)))
            elif "choice" in spec:
                domains[k] = Categorical(tuple(spec["choice"]))
            else:
                raise ConfigError(f"domain {k!r} needs one of int, real or choice")
        return cls(domains, dict(d.get("fixed") or {}))


DEFAULT_SPACES = {
    "knn": HyperparamSpace({"k": IntRange(1, 50), "metric": Categorical(("euclidean", "manhattan"))}),
    "tree": HyperparamSpace({"max_depth": IntRange(2, 12)}),
    "rf": HyperparamSpace({"max_depth": IntRange(2, 12), "n_estimators": IntRange(10, 300)}),
    "gbdt_level": HyperparamSpace({"eta": RealRange(0.01, 0.5, log=True), "reg_lambda": RealRange(0.0, 10.0)}),
    "gbdt_leaf": HyperparamSpace({"eta": RealRange(0.01, 0.5, log=True), "reg_lambda": RealRange(0.0, 10.0)}),
    "svr": HyperparamSpace({"C": RealRange(0.01, 100.0, log=True), "epsilon": RealRange(0.001, 0.1)}),
    "dnn": HyperparamSpace({"widths": Categorical(((32, 32), (64, 64), (128, 128))),
                            "lr": RealRange(1e-4, 1e-2, log=True)}),
}


def default_space(kind: str) -> HyperparamSpace:
    try:
        return DEFAULT_SPACES[kind]
    except KeyError:
        raise ConfigError(f"no default search space for {kind!r}") from None


@dataclass(frozen=True)
class SearchConfig:
    budget: int = 30
    sampler: str = "random"
    k: int = 3
    seed: int = 0
    grid_levels: int = 3
    jobs: int = 1

    def __post_init__(self):
        if self.budget < 1:
            raise ConfigError("budget must be >= 1")
        if self.k < 2:
            raise ConfigError("k must be >= 2")
        if self.sampler not in ("random", "grid"):
            raise ConfigError("sampler must be 'random' or 'grid'")


@dataclass
class Trial:
    index: int
    params: dict
    fold_scores: list
    mean_rmse: float
    wall_time: float

    @property
    def failed(self) -> bool:
        return not math.isfinite(self.mean_rmse)


@dataclass
class SearchResult:
    best_params: dict
    best_index: int
    trials: list
    t_hyper: float

    @property
    def best_score(self) -> float:
        return self.trials[self.best_index].mean_rmse


def kfold_split(n: int, k: int, seed: int = 0) -> list:
    """Shuffle ``range(n)`` with ``seed`` and cut it into ``k`` folds whose sizes differ by at most one."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise ValueError(f"cannot split {n} rows into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def cross_validate(kind: str, params: dict, train, folds) -> tuple:
    """Return ``(mean RMSE, fold scores)``; any fold that fails to fit scores ``inf``."""
    n = len(train)
    scores = []
    for held in folds:
        mask = np.ones(n, dtype=bool)
        mask[held] = False
        try:
            handle = fit_model(kind, params, train.subset(np.flatnonzero(mask)))
            pred = handle.predict(train.X[held])
            s = rmse(pred, train.y[held])
            if not math.isfinite(s):
                s = math.inf
        except Exception as exc:  # noqa: BLE001 - any training failure marks the trial failed
            warnings.warn(f"{kind} fold failed with {params}: {exc}", stacklevel=2)
            s = math.inf
        scores.append(s)
    mean = math.inf if any(math.isinf(s) for s in scores) else float(np.mean(scores))
    return mean, scores


def candidates(space: HyperparamSpace, config: SearchConfig) -> list:
    if config.sampler == "grid":
        return space.grid(config.grid_levels)[: config.budget]
    rng = np.random.default_rng(config.seed)
    return [space.sample(rng) for _ in range(config.budget)]


def _run_trial(args):
    index, kind, params, train, folds = args
    t0 = time.perf_counter()
    mean, scores = cross_validate(kind, params, train, folds)
    return Trial(index, params, scores, mean, time.perf_counter() - t0)


def search(kind: str, space: HyperparamSpace, train, config: SearchConfig = SearchConfig()) -> SearchResult:
    t0 = time.perf_counter()
    folds = kfold_split(len(train), config.k, config.seed)
    jobs = [(i, kind, params, train, folds) for i, params in enumerate(candidates(space, config))]
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(config.jobs) as pool:
            trials = list(pool.map(_run_trial, jobs))
    else:
        trials = [_run_trial(j) for j in jobs]
    trials.sort(key=lambda t: t.index)
    finite = [t for t in trials if not t.failed]
    if not finite:
        raise RuntimeError(f"every {kind} trial failed")
    best = min(finite, key=lambda t: (t.mean_rmse, t.index))
    return SearchResult(dict(best.params), best.index, trials, time.perf_counter() - t0)


def write_trials_csv(result: SearchResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", "params_json", "mean_rmse", "wall_time_s"])
        for t in result.trials:
            w.writerow([t.index, json.dumps(t.params, sort_keys=True), repr(t.mean_rmse), repr(t.wall_time)])


def read_trials_csv(path) -> list:
    with open(path, newline="") as fh:
        return [{"trial": int(r["trial"]), "params": json.loads(r["params_json"]),
                 "mean_rmse": float(r["mean_rmse"]), "wall_time_s": float(r["wall_time_s"])}
                for r in csv.DictReader(fh)]
