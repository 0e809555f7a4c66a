"""Incremental Hoeffding tree with Gaussian per-class attribute summaries."""
from __future__ import annotations

import math
from typing import List, Optional

import numpy as np
from scipy.special import ndtr

from .trees import FlatTree, entropy


def hoeffding_bound(value_range: float, delta: float, n: int) -> float:
    """Deviation bound sqrt(R^2 ln(1/delta) / 2n) holding with probability 1 - delta."""
    if n <= 0:
        raise ValueError("n must be a positive integer")
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if value_range <= 0:
        raise ValueError("range must be positive")
    return math.sqrt(value_range**2 * math.log(1.0 / delta) / (2.0 * n))


class _Node:
    __slots__ = ("feature", "threshold", "left", "right", "counts", "prior", "mean", "m2", "lo", "hi", "last_check")

    def __init__(self, d: int, prior=None):
        self.feature = -1
        self.threshold = 0.0
        self.left: Optional[int] = None
        self.right: Optional[int] = None
        self.counts = np.zeros(2)
        self.prior = np.zeros(2) if prior is None else np.asarray(prior, dtype=float)
        self.mean = np.zeros((2, d))
        self.m2 = np.zeros((2, d))
        self.lo = np.full((2, d), np.inf)
        self.hi = np.full((2, d), -np.inf)
        self.last_check = 0.0

    def distribution(self) -> np.ndarray:
        return self.counts if self.counts.sum() > 0 else self.prior


class HoeffdingTree:
    """Very fast decision tree for binary labels (1 = positive class).

    A leaf is re-evaluated every ``grace_period`` instances it receives and is
    split when the information-gain advantage of the best attribute over the
    runner-up (the no-split option counts as a candidate with gain 0) exceeds
    the Hoeffding bound, or when the bound drops below ``tau``.
    """

    def __init__(self, n_features: int, delta: float = 1e-7, tau: float = 0.05, grace_period: int = 200, n_split_points: int = 10):
        self.n_features = n_features
        self.delta = delta
        self.tau = tau
        self.grace_period = grace_period
        self.n_split_points = n_split_points
        self.nodes: List[_Node] = [_Node(n_features)]
        self.n_seen = 0

    def _leaf(self, x: np.ndarray) -> _Node:
        node = self.nodes[0]
        while node.feature >= 0:
            node = self.nodes[node.left] if x[node.feature] <= node.threshold else self.nodes[node.right]
        return node

    def update(self, x, y: int) -> "HoeffdingTree":
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_features,):
            raise ValueError(f"expected {self.n_features} features, got shape {x.shape}")
        c = int(y)
        leaf = self._leaf(x)
        leaf.counts[c] += 1
        n_c = leaf.counts[c]
        delta = x - leaf.mean[c]
        leaf.mean[c] += delta / n_c
        leaf.m2[c] += delta * (x - leaf.mean[c])
        np.minimum(leaf.lo[c], x, out=leaf.lo[c])
        np.maximum(leaf.hi[c], x, out=leaf.hi[c])
        self.n_seen += 1
        total = leaf.counts.sum()
        if total - leaf.last_check >= self.grace_period:
            leaf.last_check = total
            self._attempt_split(leaf)
        return self

    def fit(self, X, y) -> "HoeffdingTree":
        for xi, yi in zip(np.asarray(X, dtype=float), y):
            self.update(xi, yi)
        return self

    def split_gains(self, leaf: _Node):
        """Best information gain and threshold per attribute, estimated from the class Gaussians."""
        counts = leaf.counts
        n = counts.sum()
        present = counts > 0
        lo = np.min(np.where(present[:, None], leaf.lo, np.inf), axis=0)
        hi = np.max(np.where(present[:, None], leaf.hi, -np.inf), axis=0)
        steps = np.arange(1, self.n_split_points + 1) / (self.n_split_points + 1)
        thr = lo[:, None] + (hi - lo)[:, None] * steps[None, :]  # (d, S)
        left = np.zeros_like(thr)
        left_pos = np.zeros_like(thr)
        for c in (0, 1):
            if counts[c] == 0:
                continue
            var = leaf.m2[c] / (counts[c] - 1) if counts[c] > 1 else np.zeros(self.n_features)
            std = np.sqrt(np.maximum(var, 0))[:, None]
            mu = leaf.mean[c][:, None]
            with np.errstate(divide="ignore", invalid="ignore"):
                frac = np.where(std > 0, ndtr((thr - mu) / np.where(std > 0, std, 1)), (thr >= mu).astype(float))
            frac = np.where(thr < leaf.lo[c][:, None], 0.0, frac)
            frac = np.where(thr >= leaf.hi[c][:, None], 1.0, frac)
            est = counts[c] * frac
            left += est
            if c == 1:
                left_pos += est
        right = n - left
        right_pos = counts[1] - left_pos
        child = (left * entropy(left_pos, left) + right * entropy(right_pos, right)) / n
        gain = entropy(counts[1], n) - child
        gain = np.where((hi > lo)[:, None], gain, -np.inf)
        best = np.argmax(gain, axis=1)
        cols = np.arange(self.n_features)
        return gain[cols, best], thr[cols, best], left[cols, best], left_pos[cols, best]

    def _attempt_split(self, leaf: _Node):
        counts = leaf.counts
        n = counts.sum()
        if counts.min() == 0:
            return
        gains, thresholds, left, left_pos = self.split_gains(leaf)
        order = np.argsort(-gains, kind="stable")
        g1 = gains[order[0]]
        g2 = max(gains[order[1]] if self.n_features > 1 else -np.inf, 0.0)
        if not np.isfinite(g1) or g1 <= 0:
            return
        eps = hoeffding_bound(1.0, self.delta, int(n))
        if g1 - g2 > eps or eps < self.tau:
            j = int(order[0])
            leaf.feature = j
            leaf.threshold = float(thresholds[j])
            left_prior = np.array([left[j] - left_pos[j], left_pos[j]])
            self.nodes.append(_Node(self.n_features, left_prior))
            self.nodes.append(_Node(self.n_features, counts - left_prior))
            leaf.left, leaf.right = len(self.nodes) - 2, len(self.nodes) - 1

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def to_flat(self) -> FlatTree:
        tree = FlatTree()
        for node in self.nodes:
            dist = node.distribution()
            total = dist.sum()
            tree.add_leaf(dist[1] / total if total > 0 else 0.5, total)
        for i, node in enumerate(self.nodes):
            if node.feature >= 0:
                tree.feature[i], tree.threshold[i] = node.feature, node.threshold
                tree.left[i], tree.right[i] = node.left, node.right
        return tree.finalize()

    def proba(self, X) -> np.ndarray:
        return self.to_flat().proba(X)

    def to_params(self) -> dict:
        nodes = []
        for node in self.nodes:
            nodes.append(
                {
                    "feature": node.feature,
                    "threshold": node.threshold,
                    "left": node.left,
                    "right": node.right,
                    "counts": node.counts.tolist(),
                    "prior": node.prior.tolist(),
                    "mean": node.mean.tolist(),
                    "m2": node.m2.tolist(),
                    "lo": node.lo.tolist(),
                    "hi": node.hi.tolist(),
                    "last_check": node.last_check,
                }
            )
        return {
            "n_features": self.n_features,
            "delta": self.delta,
            "tau": self.tau,
            "grace_period": self.grace_period,
            "n_split_points": self.n_split_points,
            "n_seen": self.n_seen,
            "nodes": nodes,
        }

    @classmethod
    def from_params(cls, params: dict) -> "HoeffdingTree":
        model = cls(params["n_features"], params["delta"], params["tau"], params["grace_period"], params["n_split_points"])
        model.n_seen = params["n_seen"]
        model.nodes = []
        for p in params["nodes"]:
            node = _Node(model.n_features, p["prior"])
            node.feature, node.threshold = p["feature"], p["threshold"]
            node.left, node.right = p["left"], p["right"]
            for key in ("counts", "mean", "m2", "lo", "hi"):
                setattr(node, key, np.asarray(p[key], dtype=float))
            node.last_check = p["last_check"]
            model.nodes.append(node)
        return model
