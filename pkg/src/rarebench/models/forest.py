"""Bagged regression forest."""

from __future__ import annotations

import numpy as np

from .base import Regressor, register
from .tree import TreeArrays, build_tree


@register
class RandomForest(Regressor):
    kind = "rf"
    needs_scaling = False
    defaults = {
        "n_estimators": 100,
        "max_depth": None,
        "min_samples_split": 2,
        "bootstrap": True,
        "sample_fraction": 1.0,
        "feature_fraction": 1.0,
        "seed": 0,
    }

    def _validate(self):
        p = self.params
        if p["n_estimators"] < 1:
            raise ValueError("n_estimators must be >= 1")
        if not 0 < p["sample_fraction"] <= 1 or not 0 < p["feature_fraction"] <= 1:
            raise ValueError("fractions must lie in (0, 1]")

    def _fit(self, X, y):
        p = self.params
        rng = np.random.default_rng(p["seed"])
        n = X.shape[0]
        n_draw = max(1, int(round(p["sample_fraction"] * n)))
        self.bases_ = []
        self.trees_ = []
        for _ in range(p["n_estimators"]):
            if p["bootstrap"]:
                rows = rng.integers(0, n, n_draw)
            else:
                rows = np.arange(n)
            yb = y[rows]
            base = float(yb.mean())
            tree = build_tree(X[rows], yb - base, p["max_depth"], p["min_samples_split"],
                              feature_fraction=p["feature_fraction"], rng=rng)
            self.bases_.append(base)
            self.trees_.append(tree)

    def member_predictions(self, X) -> np.ndarray:
        """``(n_estimators, n_rows)`` array of individual tree predictions."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        return np.array([b + t.predict(X) for b, t in zip(self.bases_, self.trees_)])

    def _predict(self, X):
        members = self.member_predictions(X)
        total = np.zeros(X.shape[0])
        for row in members:
            total = total + row
        return total / len(members)

    def _state(self):
        return {"bases": self.bases_, "trees": [t.to_records() for t in self.trees_]}

    def _load(self, state):
        self.bases_ = list(state["bases"])
        self.trees_ = [TreeArrays.from_records(t) for t in state["trees"]]


def forest_predict(model: RandomForest, row) -> np.ndarray:
    return model.predict(row)
