"""Uniform regressor contract, registry and model files."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

FORMAT_VERSION = 1

REGISTRY: dict = {}


def register(cls):
    REGISTRY[cls.kind] = cls
    return cls


class Regressor:
    """Base class: subclasses implement ``_fit``, ``_predict``, ``_state`` and ``_load``."""

    kind = "base"
    needs_scaling = False
    defaults: dict = {}

    def __init__(self, **params):
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise ValueError(f"unknown {self.kind} hyperparameters: {sorted(unknown)}")
        self.params = {**self.defaults, **params}
        self._validate()
        self.n_features_ = None

    def _validate(self):
        pass

    def fit(self, X, y) -> "Regressor":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("training data must be a non-empty 2-D array")
        if y.shape != (X.shape[0],):
            raise ValueError("target length does not match the number of rows")
        self.n_features_ = X.shape[1]
        self._fit(X, y)
        return self

    def predict(self, X) -> np.ndarray:
        if self.n_features_ is None:
            raise RuntimeError("model is not fitted")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features_:
            raise ValueError(f"expected {self.n_features_} features, got {X.shape[1]}")
        return self._predict(X)

    def to_dict(self) -> dict:
        return {"version": FORMAT_VERSION, "kind": self.kind, "hyperparameters": self.params,
                "n_features": self.n_features_, "parameters": self._state()}

    @classmethod
    def from_dict(cls, d: dict) -> "Regressor":
        if d.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {d.get('version')}")
        model = REGISTRY[d["kind"]](**d["hyperparameters"])
        model.n_features_ = d["n_features"]
        model._load(d["parameters"])
        return model


def make(kind: str, **params) -> Regressor:
    try:
        cls = REGISTRY[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}; known: {sorted(REGISTRY)}") from None
    return cls(**params)


@dataclass
class RegressorHandle:
    """A fitted model plus the preprocessing its kind needs."""

    kind: str
    params: dict
    model: Regressor
    preprocessor: object

    def predict(self, rows) -> np.ndarray:
        return self.model.predict(self.preprocessor.transform(rows))

    def to_dict(self) -> dict:
        return {"model": self.model.to_dict(), "preprocessor": self.preprocessor.to_dict()}

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_dict(cls, d: dict) -> "RegressorHandle":
        from ..dataset import Preprocessor

        model = Regressor.from_dict(d["model"])
        return cls(model.kind, dict(model.params), model, Preprocessor.from_dict(d["preprocessor"]))

    @classmethod
    def load(cls, path) -> "RegressorHandle":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def fit(kind: str, params: dict, train) -> RegressorHandle:
    """Fit ``kind`` on a :class:`~rarebench.dataset.TabularDataset`."""
    from ..dataset import Preprocessor

    if len(train) == 0:
        raise ValueError("empty training set")
    model = make(kind, **(params or {}))
    pre = Preprocessor.fit(train, scale=model.needs_scaling)
    model.fit(pre.transform(train.X), train.y)
    return RegressorHandle(kind, dict(model.params), model, pre)


def predict(handle: RegressorHandle, rows) -> np.ndarray:
    return handle.predict(rows)
