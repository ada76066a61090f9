"""Linear epsilon-insensitive support vector regression.

Solves ``min 1/2 |w|^2 + C * sum(max(0, |y - w.x - b| - eps))`` by
coordinate descent on the dual box-constrained problem (one dual variable
``beta_i in [-C, C]`` per row, ``w = sum beta_i x_i``). The bias is carried as
an extra constant feature ``intercept_scaling``. Features and targets are
centred first, so the regularized bias column only absorbs the residual
offset and the penalty on it stays negligible.
"""

from __future__ import annotations

import numba
import numpy as np

from .base import Regressor, register


@numba.njit(cache=True)
def _dual_epoch(Z, y, q, beta, w, order, C, eps):
    max_step = 0.0
    d = Z.shape[1]
    for i in order:
        g = -y[i]
        for j in range(d):
            g += Z[i, j] * w[j]
        target = beta[i] - g / q[i]
        new = abs(target) - eps / q[i]
        if new < 0.0:
            new = 0.0
        elif target < 0.0:
            new = -new
        if new > C:
            new = C
        elif new < -C:
            new = -C
        delta = new - beta[i]
        if delta != 0.0:
            beta[i] = new
            for j in range(d):
                w[j] += delta * Z[i, j]
            step = abs(delta) * np.sqrt(q[i])
            if step > max_step:
                max_step = step
    return max_step


def eps_insensitive_loss(residual: np.ndarray, epsilon: float) -> np.ndarray:
    return np.maximum(np.abs(residual) - epsilon, 0.0)


def svr_objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, C: float, epsilon: float) -> float:
    return 0.5 * float(w @ w) + C * float(eps_insensitive_loss(y - X @ w - b, epsilon).sum())


@register
class LinearSVR(Regressor):
    kind = "svr"
    needs_scaling = True
    defaults = {"C": 1.0, "epsilon": 0.01, "max_epochs": 2000, "tol": 1e-8,
                "intercept_scaling": 1.0, "seed": 0}

    def _validate(self):
        if self.params["C"] < 0:
            raise ValueError("C must be non-negative")
        if self.params["epsilon"] < 0:
            raise ValueError("epsilon must be non-negative")

    def _fit(self, X, y):
        p = self.params
        C, eps, s = float(p["C"]), float(p["epsilon"]), float(p["intercept_scaling"])
        n, d = X.shape
        if C == 0:
            self.coef_ = np.zeros(d)
            self.intercept_ = float(y.mean())
            self.epochs_ = 0
            return
        x_mean, y_mean = X.mean(axis=0), float(y.mean())
        Z = np.hstack([X - x_mean, np.full((n, 1), s)])
        y = y - y_mean
        q = np.einsum("ij,ij->i", Z, Z)
        beta = np.zeros(n)
        w = np.zeros(d + 1)
        rng = np.random.default_rng(p["seed"])
        for epoch in range(p["max_epochs"]):
            max_step = _dual_epoch(Z, y, q, beta, w, rng.permutation(n), C, eps)
            if max_step < p["tol"]:
                break
        self.epochs_ = epoch + 1
        self.dual_ = beta
        self.coef_ = w[:d].copy()
        self.intercept_ = float(w[d] * s + y_mean - self.coef_ @ x_mean)

    def _predict(self, X):
        return X @ self.coef_ + self.intercept_

    def objective(self, X, y) -> float:
        return svr_objective(self.coef_, self.intercept_, np.asarray(X, float), np.asarray(y, float),
                             self.params["C"], self.params["epsilon"])

    def _state(self):
        return {"w": self.coef_.tolist(), "b": self.intercept_}

    def _load(self, state):
        self.coef_ = np.array(state["w"], dtype=np.float64)
        self.intercept_ = float(state["b"])


def linear_svr_fit(params: dict, X, y) -> LinearSVR:
    return LinearSVR(**params).fit(X, y)
