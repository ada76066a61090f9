"""Tabular committer-probability datasets built from BG-FFS forests."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, EmptyDatasetError, UnknownCategoryError

CONTINUOUS = "continuous"
DISCRETE = "discrete"


@dataclass
class TabularDataset:
    """Rows of ``(p_B, X_1..X_d)``; discrete columns keep their raw values."""

    y: np.ndarray
    X: np.ndarray
    columns: list
    kinds: dict
    discrete_values: dict = field(default_factory=dict)
    units: dict = field(default_factory=dict)
    process: str | None = None
    response_name: str | None = None
    groups: np.ndarray | None = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.float64)
        self.X = np.asarray(self.X, dtype=np.float64).reshape(len(self.y), len(self.columns))
        if np.any(~np.isfinite(self.X)) or np.any(~np.isfinite(self.y)):
            raise ValueError("dataset contains missing or non-finite values")
        if np.any((self.y < 0) | (self.y > 1)):
            raise ValueError("p_B must lie in [0, 1]")
        for name, allowed in self.discrete_values.items():
            col = self.X[:, self.columns.index(name)]
            if not np.all(np.isin(col, allowed)):
                raise UnknownCategoryError(f"column {name} has values outside {allowed}")

    def __len__(self):
        return len(self.y)

    @property
    def n_features(self) -> int:
        return len(self.columns)

    def subset(self, idx) -> "TabularDataset":
        idx = np.asarray(idx)
        return TabularDataset(self.y[idx], self.X[idx], list(self.columns), dict(self.kinds),
                              dict(self.discrete_values), dict(self.units), self.process,
                              self.response_name, None if self.groups is None else self.groups[idx])

    def schema(self) -> dict:
        return {
            "target": "p_B",
            "columns": [
                {"name": c, "kind": self.kinds[c], "unit": self.units.get(c, ""),
                 **({"values": list(self.discrete_values[c])} if c in self.discrete_values else {})}
                for c in self.columns
            ],
            "process": self.process,
            "response_name": self.response_name,
        }


@dataclass(frozen=True)
class FilterConfig:
    c: float | Sequence[float] = 2.0

    def __post_init__(self):
        vals = [self.c] if np.isscalar(self.c) else list(self.c)
        if any(not v > 0 for v in vals):
            raise ConfigError("filter factors must be positive")

    def factor(self, interface: int) -> float:
        if np.isscalar(self.c):
            return float(self.c)
        return float(self.c[interface])


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train fraction must lie in (0, 1)")


# --------------------------------------------------------------------------
# filtering


def filter_mask(p_b: np.ndarray, groups: Sequence, interfaces: Sequence[int], config: FilterConfig) -> np.ndarray:
    """Boolean keep-mask: within each group keep ``|p_B - mean| <= c_i * std``.

    ``groups`` labels rows (any hashable); ``interfaces`` gives the interface
    index of each row, which selects the factor ``c_i``. Population std is
    used; groups of one row are always kept.
    """
    p_b = np.asarray(p_b, dtype=np.float64)
    keep = np.zeros(len(p_b), dtype=bool)
    labels = {}
    for k, g in enumerate(groups):
        labels.setdefault(g, []).append(k)
    for rows in labels.values():
        rows = np.asarray(rows)
        if len(rows) == 1:
            keep[rows] = True
            continue
        vals = p_b[rows]
        mu = vals.mean()
        sd = vals.std()
        c = config.factor(int(interfaces[rows[0]]))
        if math.isinf(c):
            keep[rows] = True
            continue
        keep[rows] = (vals >= mu - c * sd) & (vals <= mu + c * sd)
    return keep


def filter_by_interface(crossings: Sequence, config: FilterConfig, by_response: bool = True) -> list:
    """Apply the per-interface band filter to crossing records."""
    if not crossings:
        return []
    groups = [(c.interface, c.response_value) if by_response else c.interface for c in crossings]
    mask = filter_mask([c.p_B for c in crossings], groups, [c.interface for c in crossings], config)
    return [c for c, k in zip(crossings, mask) if k]


# --------------------------------------------------------------------------
# assembly


def assemble(results: Sequence, feature_names: Sequence[str] | None = None,
             filter_config: FilterConfig | None = None, admissible: Sequence[float] | None = None,
             process: str | None = None, units: dict | None = None) -> TabularDataset:
    """One row per retained crossing; the response-action value becomes a discrete column."""
    results = list(results)
    if not results or not any(r.forest for r in results):
        raise EmptyDatasetError("no crossings to assemble")
    state_names = list(results[0].state_names)
    feature_names = list(feature_names or state_names)
    idx = [state_names.index(f) for f in feature_names]
    response = results[0].response_name
    crossings = [c for r in results for c in r.forest]
    if any(c.p_B is None for c in crossings):
        raise ValueError("committer probabilities have not been computed")
    if filter_config is not None:
        crossings = filter_by_interface(crossings, filter_config)
    if not crossings:
        raise EmptyDatasetError("filter removed every row")
    columns = list(feature_names)
    kinds = {f: CONTINUOUS for f in feature_names}
    discrete = {}
    rows = [c.x[idx] for c in crossings]
    if response:
        values = sorted(set(admissible if admissible is not None else [r.response_value for r in results]))
        columns.append(response)
        kinds[response] = DISCRETE
        discrete[response] = tuple(float(v) for v in values)
        rows = [np.append(r, c.response_value) for r, c in zip(rows, crossings)]
    y = np.array([c.p_B for c in crossings])
    groups = np.array([c.interface for c in crossings])
    return TabularDataset(y, np.vstack(rows), columns, kinds, discrete, dict(units or {}), process, response, groups)


# --------------------------------------------------------------------------
# split / scale / encode


def train_test_split(data: TabularDataset, config: SplitConfig = SplitConfig()):
    n = len(data)
    if n < 2:
        raise ValueError("need at least 2 rows to split")
    n_train = int(math.floor(config.train_fraction * n + 0.5))
    n_train = min(max(n_train, 1), n - 1)
    perm = np.random.default_rng(config.seed).permutation(n)
    return data.subset(np.sort(perm[:n_train])), data.subset(np.sort(perm[n_train:]))


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        return apply_scaler(self, X)


def fit_scaler(X: np.ndarray) -> Scaler:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("cannot fit a scaler on zero rows")
    return Scaler(X.mean(axis=0), X.std(axis=0))


def apply_scaler(scaler: Scaler, X: np.ndarray) -> np.ndarray:
    X = np.array(X, dtype=np.float64)
    live = scaler.std > 0
    X[:, live] = (X[:, live] - scaler.mean[live]) / scaler.std[live]
    return X


def encode_discrete(column, admissible) -> np.ndarray:
    """Map values to ``0..K-1`` in ascending order of the admissible set."""
    table = {float(v): k for k, v in enumerate(sorted(set(float(a) for a in admissible)))}
    out = np.empty(len(column), dtype=np.int64)
    for i, v in enumerate(column):
        try:
            out[i] = table[float(v)]
        except KeyError:
            raise UnknownCategoryError(f"value {v!r} not in admissible set {sorted(table)}") from None
    return out


@dataclass
class Preprocessor:
    """Encodes discrete columns, then optionally standardizes using train statistics."""

    columns: list
    discrete_values: dict
    scaler: Scaler | None = None

    @classmethod
    def fit(cls, train: TabularDataset, scale: bool) -> "Preprocessor":
        pre = cls(list(train.columns), dict(train.discrete_values))
        if scale:
            pre.scaler = fit_scaler(pre._encode(train.X))
        return pre

    def _encode(self, X: np.ndarray) -> np.ndarray:
        X = np.array(X, dtype=np.float64, ndmin=2)
        if X.shape[1] != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} features, got {X.shape[1]}")
        for name, allowed in self.discrete_values.items():
            j = self.columns.index(name)
            X[:, j] = encode_discrete(X[:, j], allowed)
        return X

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = self._encode(X)
        if self.scaler is not None:
            X = apply_scaler(self.scaler, X)
        return X

    def to_dict(self) -> dict:
        d = {"columns": self.columns, "discrete_values": {k: list(v) for k, v in self.discrete_values.items()}}
        if self.scaler is not None:
            d["scaler"] = {"mean": self.scaler.mean.tolist(), "std": self.scaler.std.tolist()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Preprocessor":
        sc = d.get("scaler")
        return cls(list(d["columns"]), {k: tuple(v) for k, v in d["discrete_values"].items()},
                   Scaler(np.array(sc["mean"]), np.array(sc["std"])) if sc else None)


# --------------------------------------------------------------------------
# files


def write_csv(data: TabularDataset, path, schema_path=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p_B", *data.columns])
        for yv, row in zip(data.y, data.X):
            w.writerow([repr(float(yv)), *(repr(float(v)) for v in row)])
    if schema_path is not None:
        with open(schema_path, "w") as fh:
            json.dump(data.schema(), fh, indent=2)


def read_csv(path, schema_path=None) -> TabularDataset:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        body = [[float(v) for v in row] for row in r]
    if header[0] != "p_B":
        raise ValueError("first column must be p_B")
    arr = np.array(body, dtype=np.float64).reshape(-1, len(header))
    columns = header[1:]
    kinds = {c: CONTINUOUS for c in columns}
    discrete, units, process, response = {}, {}, None, None
    if schema_path is not None:
        with open(schema_path) as fh:
            schema = json.load(fh)
        for col in schema["columns"]:
            kinds[col["name"]] = col["kind"]
            if col.get("unit"):
                units[col["name"]] = col["unit"]
            if col["kind"] == DISCRETE:
                discrete[col["name"]] = tuple(float(v) for v in col["values"])
        process, response = schema.get("process"), schema.get("response_name")
    return TabularDataset(arr[:, 0], arr[:, 1:], columns, kinds, discrete, units, process, response)


@dataclass
class _Crossing:
    interface: int
    x: np.ndarray
    p_B: float
    response_value: float | None


@dataclass
class _ForestBlock:
    forest: list
    state_names: tuple
    response_name: str | None
    response_value: float | None


def read_forest_csv(path, state_names: Sequence[str], response_name: str | None = None) -> list:
    """Read a forest CSV back into per-response blocks accepted by :func:`assemble`."""
    blocks: dict = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            v = float(row[response_name]) if response_name and row.get(response_name) not in (None, "", "None") else None
            x = np.array([float(row[s]) for s in state_names])
            c = _Crossing(int(row["interface_index"]), x, float(row["p_B"]), v)
            blocks.setdefault(v, []).append(c)
    return [_ForestBlock(f, tuple(state_names), response_name, v) for v, f in blocks.items()]
