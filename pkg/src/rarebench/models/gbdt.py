"""Gradient-boosted regression trees on squared loss.

For squared loss the negative gradient is the residual and the hessian is 1,
so a leaf's value is ``soft(sum residual, reg_alpha) / (count + reg_lambda)``.
Two growth strategies are available: level-wise (split every frontier node up
to ``max_depth``) and leaf-wise (split the highest-gain leaf until
``max_leaves``).
"""

from __future__ import annotations

import numpy as np

from .base import Regressor, register
from .tree import TreeArrays, build_tree


class _Boosted(Regressor):
    needs_scaling = False
    growth = "level"

    def _validate(self):
        p = self.params
        if not 0 <= p["eta"] <= 1:
            raise ValueError("eta must lie in [0, 1]")
        if p["reg_alpha"] < 0 or p["reg_lambda"] < 0:
            raise ValueError("regularization must be non-negative")
        if not 0 < p["subsample"] <= 1:
            raise ValueError("subsample must lie in (0, 1]")
        if p["n_estimators"] < 1:
            raise ValueError("n_estimators must be >= 1")

    def _grow(self, X, r, rng):
        raise NotImplementedError

    def _fit(self, X, y):
        p = self.params
        rng = np.random.default_rng(p["seed"])
        n = X.shape[0]
        self.base_ = float(y.mean())
        self.trees_ = []
        self.train_mse_ = []
        pred = np.full(n, self.base_)
        n_sub = max(1, int(round(p["subsample"] * n)))
        for _ in range(p["n_estimators"]):
            resid = y - pred
            if n_sub < n:
                rows = np.sort(rng.choice(n, n_sub, replace=False))
                tree = self._grow(X[rows], resid[rows], rng)
            else:
                tree = self._grow(X, resid, rng)
            self.trees_.append(tree)
            pred = pred + p["eta"] * tree.predict(X)
            self.train_mse_.append(float(np.mean((y - pred) ** 2)))

    def staged_predict(self, X):
        pred = np.full(X.shape[0], self.base_)
        for tree in self.trees_:
            pred = pred + self.params["eta"] * tree.predict(X)
            yield pred

    def _predict(self, X):
        pred = np.full(X.shape[0], self.base_)
        for tree in self.trees_:
            pred = pred + self.params["eta"] * tree.predict(X)
        return pred

    def _state(self):
        return {"base": self.base_, "trees": [t.to_records() for t in self.trees_]}

    def _load(self, state):
        self.base_ = state["base"]
        self.trees_ = [TreeArrays.from_records(t) for t in state["trees"]]


@register
class LevelWiseGBDT(_Boosted):
    kind = "gbdt_level"
    defaults = {"n_estimators": 100, "eta": 0.1, "max_depth": 6, "min_samples_split": 2,
                "subsample": 1.0, "reg_alpha": 0.0, "reg_lambda": 1.0, "seed": 0}

    def _grow(self, X, r, rng):
        p = self.params
        return build_tree(X, r, max_depth=p["max_depth"], min_samples_split=p["min_samples_split"],
                          reg_lambda=p["reg_lambda"], reg_alpha=p["reg_alpha"])


@register
class LeafWiseGBDT(_Boosted):
    kind = "gbdt_leaf"
    defaults = {"n_estimators": 100, "eta": 0.1, "max_leaves": 31, "max_depth": None,
                "min_samples_split": 2, "subsample": 1.0, "reg_alpha": 0.0, "reg_lambda": 0.0, "seed": 0}

    def _validate(self):
        super()._validate()
        if self.params["max_leaves"] < 2:
            raise ValueError("max_leaves must be >= 2")

    def _grow(self, X, r, rng):
        p = self.params
        return build_tree(X, r, max_depth=p["max_depth"], min_samples_split=p["min_samples_split"],
                          max_leaves=p["max_leaves"], reg_lambda=p["reg_lambda"], reg_alpha=p["reg_alpha"])


def gbdt_fit(params: dict, X, y, growth: str = "level") -> _Boosted:
    cls = LevelWiseGBDT if growth == "level" else LeafWiseGBDT
    return cls(**params).fit(X, y)
