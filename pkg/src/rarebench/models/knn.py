"""k-nearest-neighbour regression by exhaustive scan."""

from __future__ import annotations

import numpy as np

from .base import Regressor, register

METRICS = ("euclidean", "manhattan", "minkowski")


def pairwise_distances(A: np.ndarray, B: np.ndarray, metric: str = "euclidean", p: float = 2.0) -> np.ndarray:
    diff = np.abs(A[:, None, :] - B[None, :, :])
    if metric == "euclidean":
        return np.sqrt((diff ** 2).sum(axis=-1))
    if metric == "manhattan":
        return diff.sum(axis=-1)
    if metric == "minkowski":
        return (diff ** p).sum(axis=-1) ** (1.0 / p)
    raise ValueError(f"unknown metric {metric!r}")


@register
class KNN(Regressor):
    kind = "knn"
    needs_scaling = True
    defaults = {"k": 5, "metric": "euclidean", "p": 2.0}

    def _validate(self):
        if self.params["k"] < 1:
            raise ValueError("k must be >= 1")
        if self.params["metric"] not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")

    def _fit(self, X, y):
        if self.params["k"] > X.shape[0]:
            raise ValueError("k exceeds the number of training rows")
        self.X_ = X.copy()
        self.y_ = y.copy()

    def neighbors(self, X) -> np.ndarray:
        """Indices of the k nearest training rows; equal distances resolve to the lower index."""
        out = []
        for start in range(0, X.shape[0], 512):
            d = pairwise_distances(X[start:start + 512], self.X_, self.params["metric"], self.params["p"])
            out.append(np.argsort(d, axis=1, kind="stable")[:, : self.params["k"]])
        return np.vstack(out)

    def _predict(self, X):
        return self.y_[self.neighbors(X)].mean(axis=1)

    def _state(self):
        return {"X": self.X_.tolist(), "y": self.y_.tolist()}

    def _load(self, state):
        self.X_ = np.array(state["X"], dtype=np.float64)
        self.y_ = np.array(state["y"], dtype=np.float64)
