"""Metric tables, weighted cost, local rankings and the weight-averaged global ranking."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import astuple, dataclass, fields
from typing import Mapping, Sequence

import numpy as np

METRIC_NAMES = ("rmse", "t_hyper", "t_train", "t_test", "t_deploy", "delta_p", "total_alarms")
TIMING_METRICS = ("t_hyper", "t_train", "t_test", "t_deploy")


@dataclass
class MetricVector:
    """The seven per-(model, dataset) metrics, in reporting order."""

    rmse: float
    t_hyper: float
    t_train: float
    t_test: float
    t_deploy: float
    delta_p: float
    total_alarms: float

    def __post_init__(self):
        for f in fields(self):
            v = float(getattr(self, f.name))
            if not v >= 0:
                raise ValueError(f"metric {f.name} must be non-negative, got {v}")
            setattr(self, f.name, v)

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=np.float64)

    @classmethod
    def from_array(cls, a) -> "MetricVector":
        return cls(*(float(v) for v in a))


@dataclass(frozen=True)
class WeightVector:
    a: tuple

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        if len(a) != len(METRIC_NAMES):
            raise ValueError(f"need {len(METRIC_NAMES)} weights, got {len(a)}")
        if any(not v > 0 for v in a):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "a", a)

    def as_array(self) -> np.ndarray:
        return np.array(self.a)

    def scaled(self, factor: float) -> "WeightVector":
        return WeightVector(tuple(factor * v for v in self.a))


DEFAULT_WEIGHTS = WeightVector((0.125, 0.05, 0.05, 0.05, 0.125, 0.3, 0.3))


@dataclass(frozen=True)
class WeightBounds:
    lo: tuple = (0.1, 0.05, 0.05, 0.05, 0.1, 0.3, 0.3)
    hi: tuple = (0.2, 0.1, 0.1, 0.1, 0.2, 4.0, 4.0)

    def __post_init__(self):
        if len(self.lo) != len(METRIC_NAMES) or len(self.hi) != len(METRIC_NAMES):
            raise ValueError("bounds need one entry per metric")
        for lo, hi in zip(self.lo, self.hi):
            if not 0 < lo <= hi:
                raise ValueError(f"invalid bound [{lo}, {hi}]")

    @classmethod
    def alarm_cap(cls, cap: float) -> "WeightBounds":
        """Default bounds with the alarm-metric upper limits replaced by ``cap``."""
        base = cls()
        return cls(base.lo, (*base.hi[:5], cap, cap))


# --------------------------------------------------------------------------
# metrics and cost


def rmse(predictions, targets) -> float:
    p = np.asarray(predictions, dtype=np.float64).ravel()
    t = np.asarray(targets, dtype=np.float64).ravel()
    if p.size == 0 or p.shape != t.shape:
        raise ValueError("rmse needs equal, non-zero lengths")
    return math.sqrt(float(np.mean((p - t) ** 2)))


def scale_metrics(table: Mapping[str, MetricVector]) -> dict:
    """Divide each metric by its maximum over models; an all-zero column stays zero."""
    if not table:
        raise ValueError("need at least one model")
    names = list(table)
    M = np.array([table[n].as_array() for n in names])
    top = M.max(axis=0)
    for j in np.flatnonzero(top == 0):
        warnings.warn(f"metric {METRIC_NAMES[j]} is zero for every model; scaled to 0", stacklevel=2)
    S = np.divide(M, top, out=np.zeros_like(M), where=top > 0)
    return {n: MetricVector.from_array(S[i]) for i, n in enumerate(names)}


def cost(scaled: MetricVector, w: WeightVector = DEFAULT_WEIGHTS) -> float:
    return float(np.dot(w.as_array(), scaled.as_array()))


def rank_models(costs: Mapping[str, float]) -> dict:
    """Dense ranks by ascending cost; 1 is best and equal costs share a rank."""
    if not costs:
        raise ValueError("need at least one model")
    levels = sorted(set(costs.values()))
    rank_of = {c: i + 1 for i, c in enumerate(levels)}
    return {name: rank_of[costs[name]] for name in sorted(costs)}


def average_local_ranking(rankings: Mapping[str, Mapping[str, float]]) -> dict:
    """Mean rank per model over datasets; ``rankings`` maps dataset -> model -> rank."""
    if not rankings:
        raise ValueError("need at least one dataset")
    models = sorted({m for r in rankings.values() for m in r})
    out = {}
    for m in models:
        ranks = []
        for ds, r in rankings.items():
            if m not in r:
                raise KeyError(f"model {m!r} has no rank on dataset {ds!r}")
            ranks.append(float(r[m]))
        out[m] = float(np.mean(ranks))
    return out


def sample_weight_vectors(bounds: WeightBounds = WeightBounds(), count: int = 500, seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    lo, hi = np.array(bounds.lo), np.array(bounds.hi)
    draws = lo + (hi - lo) * rng.random((count, len(lo)))
    return [WeightVector(tuple(row)) for row in draws]


def local_ranking(table: Mapping[str, MetricVector], w: WeightVector = DEFAULT_WEIGHTS) -> tuple:
    """Return ``(scaled, costs, ranks)`` for one dataset."""
    scaled = scale_metrics(table)
    costs = {m: cost(v, w) for m, v in scaled.items()}
    return scaled, costs, rank_models(costs)


def global_ranking(tables: Mapping[str, Mapping[str, MetricVector]], weights: Sequence[WeightVector]) -> dict:
    """Average local ranks over datasets, then over weight vectors.

    ``tables`` maps dataset -> model -> raw metrics. The result is ordered by
    ascending mean rank, then by model name.
    """
    models = sorted({m for t in tables.values() for m in t})
    for ds, t in tables.items():
        missing = set(models) - set(t)
        if missing:
            raise KeyError(f"dataset {ds!r} lacks metrics for {sorted(missing)}")
    if not weights:
        raise ValueError("need at least one weight vector")
    scaled = {ds: scale_metrics(t) for ds, t in tables.items()}
    total = dict.fromkeys(models, 0.0)
    for w in weights:
        per_ds = {ds: rank_models({m: cost(v, w) for m, v in s.items()}) for ds, s in scaled.items()}
        for m, r in average_local_ranking(per_ds).items():
            total[m] += r
    mean = {m: total[m] / len(weights) for m in models}
    return dict(sorted(mean.items(), key=lambda kv: (kv[1], kv[0])))


# --------------------------------------------------------------------------
# reports


def _write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def write_metric_table(table: Mapping[str, MetricVector], path) -> None:
    """Rows are models (sorted by name), columns are the seven metrics."""
    _write_table(path, ["model", *METRIC_NAMES],
                 [[m, *(repr(float(v)) for v in table[m].as_array())] for m in sorted(table)])


def read_metric_table(path) -> dict:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if tuple(header[1:]) != METRIC_NAMES:
            raise ValueError(f"unexpected metric columns {header[1:]}")
        return {row[0]: MetricVector(*(float(v) for v in row[1:])) for row in r}


def write_report(table: Mapping[str, MetricVector], out_dir, w: WeightVector = DEFAULT_WEIGHTS) -> dict:
    """Write ``metrics.csv``, ``metrics_scaled.csv``, ``costs.csv`` and ``ranking.csv``.

    Returns the ranking.
    """
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scaled, costs, ranks = local_ranking(table, w)
    write_metric_table(table, out / "metrics.csv")
    write_metric_table(scaled, out / "metrics_scaled.csv")
    _write_table(out / "costs.csv", ["model", "cost"], [[m, repr(costs[m])] for m in sorted(costs)])
    order = sorted(ranks, key=lambda m: (ranks[m], m))
    _write_table(out / "ranking.csv", ["model", "rank", "cost"], [[m, ranks[m], repr(costs[m])] for m in order])
    return ranks


def write_global_ranking(ranking: Mapping[str, float], path) -> None:
    _write_table(path, ["model", "mean_rank"], [[m, repr(float(r))] for m, r in ranking.items()])
