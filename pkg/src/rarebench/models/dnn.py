"""Dense feed-forward network trained by back-propagation on mean-squared error."""

from __future__ import annotations

import numpy as np

from ..errors import DivergenceError
from .base import Regressor, register


class Network:
    """ReLU hidden layers and a linear scalar output, in float64.

    ``widths=()`` gives a plain linear model.
    """

    def __init__(self, n_in: int, widths=(64, 64), rng: np.random.Generator | None = None, zero: bool = False):
        sizes = [n_in, *widths, 1]
        self.weights = []
        self.biases = []
        for a, b in zip(sizes[:-1], sizes[1:]):
            if zero or rng is None:
                W = np.zeros((a, b))
            else:
                W = rng.normal(0.0, np.sqrt(2.0 / a), size=(a, b))
            self.weights.append(W)
            self.biases.append(np.zeros(b))

    @property
    def params(self) -> list:
        return [*self.weights, *self.biases]

    def forward(self, X):
        acts = [X]
        pre = []
        h = X
        last = len(self.weights) - 1
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ W + b
            pre.append(z)
            h = z if k == last else np.maximum(z, 0.0)
            acts.append(h)
        return h[:, 0], acts, pre

    def predict(self, X) -> np.ndarray:
        return self.forward(np.asarray(X, dtype=np.float64))[0]

    def loss(self, X, y) -> float:
        return float(np.mean((self.predict(X) - y) ** 2))

    def gradients(self, X, y):
        """Return ``(loss, [dW...], [db...])`` of the mean-squared error."""
        X = np.asarray(X, dtype=np.float64)
        out, acts, pre = self.forward(X)
        n = X.shape[0]
        resid = out - y
        loss = float(np.mean(resid ** 2))
        delta = (2.0 / n) * resid[:, None]
        gW = [None] * len(self.weights)
        gb = [None] * len(self.weights)
        for k in range(len(self.weights) - 1, -1, -1):
            gW[k] = acts[k].T @ delta
            gb[k] = delta.sum(axis=0)
            if k > 0:
                delta = (delta @ self.weights[k].T) * (pre[k - 1] > 0)
        return loss, gW, gb


class Adam:
    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1 - self.b1 ** self.t
        c2 = 1 - self.b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class SGD:
    def __init__(self, params, lr=1e-2):
        self.lr = lr

    def step(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.lr * g


@register
class DNN(Regressor):
    kind = "dnn"
    needs_scaling = True
    defaults = {"widths": (64, 64), "epochs": 200, "batch_size": 32, "lr": 1e-3, "optimizer": "adam", "seed": 0}

    def _validate(self):
        p = self.params
        p["widths"] = tuple(int(w) for w in p["widths"])
        if len(p["widths"]) < 1 or min(p["widths"]) < 1:
            raise ValueError("need at least one hidden layer of width >= 1")
        if p["optimizer"] not in ("adam", "sgd"):
            raise ValueError("optimizer must be 'adam' or 'sgd'")

    def _fit(self, X, y):
        p = self.params
        rng = np.random.default_rng(p["seed"])
        self.net_ = Network(X.shape[1], p["widths"], rng)
        params = self.net_.params
        opt = Adam(params, p["lr"]) if p["optimizer"] == "adam" else SGD(params, p["lr"])
        n = X.shape[0]
        bs = min(p["batch_size"], n)
        self.loss_history_ = []
        for _ in range(p["epochs"]):
            order = rng.permutation(n)
            for s in range(0, n, bs):
                idx = order[s:s + bs]
                # overflow is caught by the finiteness check below
                with np.errstate(over="ignore", invalid="ignore"):
                    loss, gW, gb = self.net_.gradients(X[idx], y[idx])
                if not np.isfinite(loss):
                    raise DivergenceError(f"non-finite training loss; try a learning rate below {p['lr']}")
                opt.step(params, [*gW, *gb])
            self.loss_history_.append(self.net_.loss(X, y))

    def _predict(self, X):
        return self.net_.predict(X)

    def _state(self):
        return {"weights": [W.tolist() for W in self.net_.weights], "biases": [b.tolist() for b in self.net_.biases]}

    def _load(self, state):
        self.net_ = Network(len(state["weights"][0]), self.params["widths"], zero=True)
        self.net_.weights = [np.array(W, dtype=np.float64) for W in state["weights"]]
        self.net_.biases = [np.array(b, dtype=np.float64) for b in state["biases"]]


def dnn_gradients(model: DNN, X, y):
    return model.net_.gradients(X, y)
