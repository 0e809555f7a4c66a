"""Decision trees: randomized info-gain tree (forest member), C4.5 and weighted stumps."""
from __future__ import annotations

import math
import sys
from typing import Optional

import numpy as np
from scipy.stats import norm


def entropy(pos, tot):
    """Binary entropy in bits of ``pos`` positives out of ``tot`` (elementwise, 0 for empty)."""
    pos = np.asarray(pos, dtype=float)
    tot = np.asarray(tot, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(tot > 0, pos / np.where(tot > 0, tot, 1), 0.0)
        q = 1.0 - p
        h = -(np.where(p > 0, p * np.log2(np.where(p > 0, p, 1)), 0.0) + np.where(q > 0, q * np.log2(np.where(q > 0, q, 1)), 0.0))
    return h


class FlatTree:
    """Binary tree stored as parallel arrays; leaves have ``feature == -1``.

    ``value`` is the fraction of class 1 (deviant) among the training rows
    that reached the node, ``count`` their number.
    """

    def __init__(self):
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []
        self.count = []

    def add_leaf(self, value: float, count: float) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(value))
        self.count.append(float(count))
        return len(self.feature) - 1

    def finalize(self):
        self.feature = np.asarray(self.feature, dtype=np.int64)
        self.threshold = np.asarray(self.threshold, dtype=float)
        self.left = np.asarray(self.left, dtype=np.int64)
        self.right = np.asarray(self.right, dtype=np.int64)
        self.value = np.asarray(self.value, dtype=float)
        self.count = np.asarray(self.count, dtype=float)
        return self

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def leaf_count(self) -> int:
        return int(np.sum(np.asarray(self.feature) < 0))

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            f = self.feature[node]
            idx = np.nonzero(f >= 0)[0]
            if idx.size == 0:
                return node
            cur = node[idx]
            go_left = X[idx, f[idx]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])

    def proba(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_params(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "count": self.count.tolist(),
        }

    @classmethod
    def from_params(cls, params: dict) -> "FlatTree":
        tree = cls()
        for key in ("feature", "threshold", "left", "right", "value", "count"):
            setattr(tree, key, list(params[key]))
        return tree.finalize()


def _midpoint(a, b):
    mid = 0.5 * (a + b)
    return np.where(mid < b, mid, a)


def candidate_splits(Xn: np.ndarray, yn: np.ndarray, min_leaf: int):
    """Sorted views plus per-position left counts for every column of ``Xn``.

    Position i separates the i+1 smallest values from the rest; ``valid``
    marks positions between distinct values leaving at least ``min_leaf`` rows
    on each side.
    """
    n = Xn.shape[0]
    order = np.argsort(Xn, axis=0, kind="stable")
    xs = np.take_along_axis(Xn, order, axis=0)
    ys = yn[order]
    pos_left = np.cumsum(ys, axis=0)[:-1]
    n_left = np.arange(1, n, dtype=float)[:, None]
    valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n - n_left >= min_leaf)
    return xs, pos_left, n_left, valid


def info_gains(Xn, yn, min_leaf):
    """Information gain of every valid binary split of every column."""
    n = Xn.shape[0]
    pos = float(yn.sum())
    xs, pos_left, n_left, valid = candidate_splits(Xn, yn, min_leaf)
    n_right = n - n_left
    child = (n_left * entropy(pos_left, n_left) + n_right * entropy(pos - pos_left, n_right)) / n
    gain = entropy(pos, n) - child
    return xs, gain, n_left, valid


class RandomTree:
    """Unpruned info-gain tree choosing among ``max_features`` random attributes per node.

    When none of the sampled attributes yields positive gain, further random
    attributes are tried before the node becomes a leaf.
    """

    def __init__(self, max_features: Optional[int] = None, min_leaf: int = 1):
        self.max_features = max_features
        self.min_leaf = min_leaf
        self.tree: Optional[FlatTree] = None

    def fit(self, X, y, rng: np.random.Generator) -> "RandomTree":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        n, d = X.shape
        k = self.max_features or max(1, math.ceil(math.sqrt(d)))
        tree = FlatTree()
        root = tree.add_leaf(y.mean(), n)
        stack = [(root, np.arange(n))]
        while stack:
            node, idx = stack.pop()
            yn = y[idx]
            pos = yn.sum()
            if pos == 0 or pos == idx.size or idx.size < 2 * self.min_leaf:
                continue
            perm = rng.permutation(d)
            best = None
            for start in range(0, d, k):
                feats = perm[start : start + k]
                xs, gain, _, valid = info_gains(X[np.ix_(idx, feats)], yn, self.min_leaf)
                gain = np.where(valid, gain, -np.inf)
                flat = int(np.argmax(gain))
                i, j = np.unravel_index(flat, gain.shape)
                if gain[i, j] > 1e-12:
                    best = (int(feats[j]), float(_midpoint(xs[i, j], xs[i + 1, j])))
                    break
            if best is None:
                continue
            f, thr = best
            go_left = X[idx, f] <= thr
            li, ri = idx[go_left], idx[~go_left]
            left = tree.add_leaf(y[li].mean(), li.size)
            right = tree.add_leaf(y[ri].mean(), ri.size)
            tree.feature[node], tree.threshold[node] = f, thr
            tree.left[node], tree.right[node] = left, right
            stack.append((right, ri))
            stack.append((left, li))
        self.tree = tree.finalize()
        return self

    def proba(self, X) -> np.ndarray:
        return self.tree.proba(X)


def added_errors(n: float, e: float, cf: float) -> float:
    """Extra errors of C4.5's pessimistic estimate: upper confidence bound on ``e`` errors in ``n``."""
    if e < 1:
        base = n * (1.0 - cf ** (1.0 / n))
        if e == 0:
            return base
        return base + e * (added_errors(n, 1.0, cf) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    z = norm.ppf(1.0 - cf)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n) + z * math.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n)
    return r * n - e


class C45Tree:
    """C4.5-style tree: gain-ratio binary splits on numeric attributes, pessimistic pruning.

    Only attributes whose (MDL-corrected) gain reaches the average gain of the
    candidates compete on gain ratio. Pruning replaces a subtree by a leaf when
    the leaf's estimated errors do not exceed the subtree's.
    """

    def __init__(self, confidence: float = 0.25, min_leaf: int = 2, prune: bool = True):
        self.confidence = confidence
        self.min_leaf = min_leaf
        self.prune = prune
        self.tree: Optional[FlatTree] = None

    def _split(self, Xn, yn):
        n = Xn.shape[0]
        xs, gain, n_left, valid = info_gains(Xn, yn, self.min_leaf)
        n_valid = valid.sum(axis=0)
        usable = n_valid > 0
        if not usable.any():
            return None
        gain = np.where(valid, gain, -np.inf)
        pos = np.argmax(gain, axis=0)
        cols = np.arange(Xn.shape[1])
        best_gain = gain[pos, cols] - np.log2(np.maximum(n_valid, 1)) / n
        frac = n_left[pos, 0] / n
        split_info = entropy(frac * n, n)
        usable &= (best_gain > 0) & (split_info > 0)
        if not usable.any():
            return None
        avg = best_gain[usable].mean()
        ratio = np.where(usable & (best_gain >= avg - 1e-12), best_gain / np.where(split_info > 0, split_info, 1), -np.inf)
        j = int(np.argmax(ratio))
        if not np.isfinite(ratio[j]):
            return None
        i = pos[j]
        return j, float(_midpoint(xs[i, j], xs[i + 1, j]))

    def fit(self, X, y) -> "C45Tree":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        n = X.shape[0]
        tree = FlatTree()
        root = tree.add_leaf(y.mean(), n)
        stack = [(root, np.arange(n))]
        while stack:
            node, idx = stack.pop()
            yn = y[idx]
            pos = yn.sum()
            if pos == 0 or pos == idx.size or idx.size < 2 * self.min_leaf:
                continue
            split = self._split(X[idx], yn)
            if split is None:
                continue
            f, thr = split
            go_left = X[idx, f] <= thr
            li, ri = idx[go_left], idx[~go_left]
            left = tree.add_leaf(y[li].mean(), li.size)
            right = tree.add_leaf(y[ri].mean(), ri.size)
            tree.feature[node], tree.threshold[node] = f, thr
            tree.left[node], tree.right[node] = left, right
            stack.append((right, ri))
            stack.append((left, li))
        tree.finalize()
        self.tree = self._pruned(tree) if self.prune else tree
        return self

    def _leaf_errors(self, tree, node):
        n = tree.count[node]
        v = tree.value[node]
        e = n * min(v, 1.0 - v)
        return e + added_errors(n, e, self.confidence)

    def _pruned(self, tree: FlatTree) -> FlatTree:
        keep_leaf = {}

        def visit(node):
            # returns estimated errors of the (possibly pruned) subtree
            if tree.feature[node] < 0:
                return self._leaf_errors(tree, node)
            subtree = visit(tree.left[node]) + visit(tree.right[node])
            as_leaf = self._leaf_errors(tree, node)
            if as_leaf <= subtree + 0.1:
                keep_leaf[node] = True
                return as_leaf
            return subtree

        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 10 * len(tree.feature) + 100))
        try:
            visit(0)
        finally:
            sys.setrecursionlimit(limit)

        out = FlatTree()
        stack = [(0, out.add_leaf(tree.value[0], tree.count[0]))]
        while stack:
            old, new = stack.pop()
            if tree.feature[old] < 0 or keep_leaf.get(old):
                continue
            lo, ro = tree.left[old], tree.right[old]
            ln = out.add_leaf(tree.value[lo], tree.count[lo])
            rn = out.add_leaf(tree.value[ro], tree.count[ro])
            out.feature[new], out.threshold[new] = tree.feature[old], tree.threshold[old]
            out.left[new], out.right[new] = ln, rn
            stack.append((ro, rn))
            stack.append((lo, ln))
        return out.finalize()

    def proba(self, X) -> np.ndarray:
        return self.tree.proba(X)

    def to_params(self) -> dict:
        return {"confidence": self.confidence, "min_leaf": self.min_leaf, "prune": self.prune, "tree": self.tree.to_params()}

    @classmethod
    def from_params(cls, params: dict) -> "C45Tree":
        model = cls(params["confidence"], params["min_leaf"], params["prune"])
        model.tree = FlatTree.from_params(params["tree"])
        return model


class DecisionStump:
    """Single weighted split minimizing weighted classification error."""

    def __init__(self, feature=0, threshold=0.0, left_value=0.0, right_value=0.0):
        self.feature = feature
        self.threshold = threshold
        self.left_value = left_value
        self.right_value = right_value

    @classmethod
    def fit(cls, X, y, w, order: Optional[np.ndarray] = None) -> "DecisionStump":
        X = np.asarray(X, dtype=float)
        n, d = X.shape
        if order is None:
            order = np.argsort(X, axis=0, kind="stable")
        xs = np.take_along_axis(X, order, axis=0)
        wpos = np.where(y[order] == 1, w[order], 0.0)
        wneg = w[order] - wpos
        pos_l = np.cumsum(wpos, axis=0)[:-1]
        neg_l = np.cumsum(wneg, axis=0)[:-1]
        pos_t, neg_t = wpos[:, 0].sum(), wneg[:, 0].sum()
        pos_r, neg_r = pos_t - pos_l, neg_t - neg_l
        err = np.minimum(pos_l, neg_l) + np.minimum(pos_r, neg_r)
        err = np.where(xs[1:] > xs[:-1], err, np.inf)
        base = min(pos_t, neg_t)
        if n < 2 or not np.isfinite(err).any() or err.min() >= base:
            value = 1.0 if pos_t >= neg_t else 0.0
            return cls(0, np.inf, value, value)
        i, j = np.unravel_index(int(np.argmin(err)), err.shape)
        thr = float(_midpoint(xs[i, j], xs[i + 1, j]))
        left = 1.0 if pos_l[i, j] >= neg_l[i, j] else 0.0
        right = 1.0 if pos_r[i, j] >= neg_r[i, j] else 0.0
        return cls(int(j), thr, left, right)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.where(X[:, self.feature] <= self.threshold, self.left_value, self.right_value)

    def to_params(self) -> dict:
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left_value": self.left_value,
            "right_value": self.right_value,
        }
