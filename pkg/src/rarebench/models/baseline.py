"""Constant predictor: the training mean. Useful as a floor for the other models."""

from __future__ import annotations

import numpy as np

from .base import Regressor, register


@register
class MeanRegressor(Regressor):
    kind = "mean"
    needs_scaling = False
    defaults: dict = {}

    def _fit(self, X, y):
        self.mean_ = float(y.mean())

    def _predict(self, X):
        return np.full(X.shape[0], self.mean_)

    def _state(self):
        return {"mean": self.mean_}

    def _load(self, state):
        self.mean_ = float(state["mean"])
