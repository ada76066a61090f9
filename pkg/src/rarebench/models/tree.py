"""Regression trees grown by exhaustive variance-reduction splits.

One builder serves the plain tree, the forest members and both boosting
strategies. Targets are centred on the training mean before growing, so a
plain tree and a single unregularized boosting stage run the same arithmetic.

With leaf score ``S(R, n) = soft(R, alpha)^2 / (n + lambda)`` (``R`` = sum of
targets in a node), the split gain is ``S_left + S_right - S_parent``. For
``alpha = lambda = 0`` this is the drop in the sum of squared errors, i.e.
``n`` times the weighted variance reduction.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .base import Regressor, register

# relative gap below which two split gains count as tied
TIE_RTOL = 1e-9


def _soft(r, alpha):
    if alpha == 0.0:
        return r
    return np.sign(r) * np.maximum(np.abs(r) - alpha, 0.0)


def leaf_value(r_sum: float, n: int, reg_lambda: float = 0.0, reg_alpha: float = 0.0) -> float:
    return float(_soft(r_sum, reg_alpha) / (n + reg_lambda))


def best_split(X: np.ndarray, r: np.ndarray, rows: np.ndarray, features, reg_lambda: float = 0.0,
               reg_alpha: float = 0.0):
    """Best ``(feature, threshold, gain)`` over midpoints of sorted unique values.

    Ties go to the lowest feature index, then the lowest threshold. Returns
    ``None`` when no split has positive gain.
    """
    rr = r[rows]
    n = rr.shape[0]
    if n < 2:
        return None
    total = rr.sum()
    parent = _soft(total, reg_alpha) ** 2 / (n + reg_lambda)
    best = None
    best_gain = 0.0
    for j in features:
        xs = X[rows, j]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        valid = xs[1:] > xs[:-1]
        if not valid.any():
            continue
        cs = np.cumsum(rr[order])[:-1]
        n_left = np.arange(1, n, dtype=np.float64)
        gain = (_soft(cs, reg_alpha) ** 2 / (n_left + reg_lambda)
                + _soft(total - cs, reg_alpha) ** 2 / (n - n_left + reg_lambda) - parent)
        gain = np.where(valid, gain, -np.inf)
        g = gain.max()
        tol = TIE_RTOL * max(abs(g), 1e-300)
        if best is not None and g <= best_gain + TIE_RTOL * max(abs(best_gain), 1e-300):
            continue
        k = int(np.flatnonzero(gain >= g - tol)[0])
        thr = 0.5 * (xs[k] + xs[k + 1])
        if not xs[k] <= thr < xs[k + 1]:
            thr = xs[k]
        best, best_gain = (j, float(thr), float(gain[k])), float(gain[k])
    # gains at roundoff level of the node's spread are not splits
    if best is None or not best_gain > 1e-12 * float(rr @ rr):
        return None
    return best


@dataclass
class TreeArrays:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.left[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.left[node] >= 0
        return self.value[node]

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.left < 0))

    @property
    def depth(self) -> int:
        depth = np.zeros(len(self.left), dtype=int)
        for i in range(len(self.left)):
            if self.left[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def to_records(self) -> dict:
        def rec(i):
            if self.left[i] < 0:
                return {"feature": None, "threshold": None, "left": None, "right": None,
                        "leaf_value": float(self.value[i])}
            return {"feature": int(self.feature[i]), "threshold": float(self.threshold[i]),
                    "left": rec(self.left[i]), "right": rec(self.right[i]), "leaf_value": None}

        return rec(0)

    @classmethod
    def from_records(cls, root: dict) -> "TreeArrays":
        feat, thr, left, right, val = [], [], [], [], []

        def add(node):
            i = len(feat)
            feat.append(-1), thr.append(0.0), left.append(-1), right.append(-1), val.append(0.0)
            if node["leaf_value"] is not None:
                val[i] = node["leaf_value"]
            else:
                feat[i], thr[i] = node["feature"], node["threshold"]
                left[i] = add(node["left"])
                right[i] = add(node["right"])
            return i

        add(root)
        return cls(np.array(feat), np.array(thr), np.array(left), np.array(right), np.array(val))


def build_tree(X: np.ndarray, r: np.ndarray, max_depth: int | None = None, min_samples_split: int = 2,
               max_leaves: int | None = None, reg_lambda: float = 0.0, reg_alpha: float = 0.0,
               feature_fraction: float = 1.0, rng: np.random.Generator | None = None) -> TreeArrays:
    """Grow a tree on targets ``r``.

    ``max_leaves=None`` grows level-wise (every frontier node is split, depth
    by depth); otherwise the leaf with the largest gain is split repeatedly
    until ``max_leaves`` leaves exist. ``max_depth`` applies to both.
    """
    X = np.asarray(X, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    d = X.shape[1]
    n_sub = max(1, int(round(feature_fraction * d)))
    feat, thr, left, right, val = [], [], [], [], []

    def new_node(rows):
        feat.append(-1), thr.append(0.0), left.append(-1), right.append(-1)
        val.append(leaf_value(r[rows].sum(), len(rows), reg_lambda, reg_alpha))
        return len(feat) - 1

    def candidates():
        if n_sub >= d:
            return range(d)
        return np.sort(rng.choice(d, n_sub, replace=False))

    def try_split(rows, depth):
        if len(rows) < min_samples_split or (max_depth is not None and depth >= max_depth):
            return None
        return best_split(X, r, rows, candidates(), reg_lambda, reg_alpha)

    def apply(node, rows, split):
        j, t, _ = split
        mask = X[rows, j] <= t
        lrows, rrows = rows[mask], rows[~mask]
        feat[node], thr[node] = j, t
        left[node] = new_node(lrows)
        right[node] = new_node(rrows)
        return (left[node], lrows), (right[node], rrows)

    root_rows = np.arange(X.shape[0])
    root = new_node(root_rows)
    if max_leaves is None:
        frontier = [(root, root_rows)]
        depth = 0
        while frontier:
            nxt = []
            for node, rows in frontier:
                split = try_split(rows, depth)
                if split is not None:
                    nxt.extend(apply(node, rows, split))
            frontier = nxt
            depth += 1
    else:
        heap = []
        order = 0
        split = try_split(root_rows, 0)
        if split is not None:
            heap.append((-split[2], order, root, root_rows, 0, split))
        n_leaves = 1
        while heap and n_leaves < max_leaves:
            _, _, node, rows, depth, split = heapq.heappop(heap)
            for child, crows in apply(node, rows, split):
                order += 1
                s = try_split(crows, depth + 1)
                if s is not None:
                    heapq.heappush(heap, (-s[2], order, child, crows, depth + 1, s))
            n_leaves += 1
    return TreeArrays(np.array(feat, dtype=np.int64), np.array(thr), np.array(left, dtype=np.int64),
                      np.array(right, dtype=np.int64), np.array(val))


def tree_best_split(X: np.ndarray, y: np.ndarray, features=None):
    """Best split of raw targets as ``(feature, threshold, weighted variance reduction)``.

    Returns ``None`` when no split reduces variance.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    r = y - y.mean()
    rows = np.arange(len(y))
    s = best_split(X, r, rows, range(X.shape[1]) if features is None else features)
    if s is None:
        return None
    return s[0], s[1], s[2] / len(y)


@register
class DecisionTree(Regressor):
    kind = "tree"
    needs_scaling = False
    defaults = {"max_depth": None, "min_samples_split": 2}

    def _validate(self):
        p = self.params
        if p["max_depth"] is not None and p["max_depth"] < 1:
            raise ValueError("max_depth must be >= 1")
        if p["min_samples_split"] < 2:
            raise ValueError("min_samples_split must be >= 2")

    def _fit(self, X, y):
        self.base_ = float(y.mean())
        self.tree_ = build_tree(X, y - self.base_, self.params["max_depth"], self.params["min_samples_split"])

    def _predict(self, X):
        return self.base_ + self.tree_.predict(X)

    def _state(self):
        return {"base": self.base_, "tree": self.tree_.to_records()}

    def _load(self, state):
        self.base_ = state["base"]
        self.tree_ = TreeArrays.from_records(state["tree"])
