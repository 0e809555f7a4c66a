"""AdaBoost.M1 over decision stumps and a random forest of randomized trees."""
from __future__ import annotations

import math
from typing import List, Optional

import numpy as np

from .trees import DecisionStump, FlatTree, RandomTree


class AdaBoostM1:
    def __init__(self, rounds: int = 10):
        self.rounds = rounds
        self.stumps: List[DecisionStump] = []
        self.alphas: List[float] = []
        self.weight_history: List[np.ndarray] = []

    def fit(self, X, y) -> "AdaBoostM1":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        n = X.shape[0]
        order = np.argsort(X, axis=0, kind="stable")
        w = np.full(n, 1.0 / n)
        self.stumps, self.alphas, self.weight_history = [], [], [w.copy()]
        for _ in range(self.rounds):
            stump = DecisionStump.fit(X, y, w, order)
            wrong = stump.predict(X) != y
            err = float(w[wrong].sum())
            if err >= 0.5:
                if not self.stumps:
                    self.stumps.append(stump)
                    self.alphas.append(1.0)
                break
            if err == 0.0:
                self.stumps.append(stump)
                self.alphas.append(1.0 if not self.alphas else max(self.alphas) + 1.0)
                break
            beta = err / (1.0 - err)
            self.stumps.append(stump)
            self.alphas.append(math.log(1.0 / beta))
            w = np.where(wrong, w, w * beta)
            w = w / w.sum()
            self.weight_history.append(w.copy())
        return self

    def staged_proba(self, X):
        """Deviant vote share after each boosting round."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        votes = np.zeros(X.shape[0])
        total = 0.0
        for stump, alpha in zip(self.stumps, self.alphas):
            votes += alpha * stump.predict(X)
            total += alpha
            yield votes / total

    def proba(self, X) -> np.ndarray:
        out = None
        for out in self.staged_proba(X):
            pass
        return out

    def to_params(self) -> dict:
        return {"rounds": self.rounds, "alphas": list(self.alphas), "stumps": [s.to_params() for s in self.stumps]}

    @classmethod
    def from_params(cls, params: dict) -> "AdaBoostM1":
        model = cls(params["rounds"])
        model.alphas = [float(a) for a in params["alphas"]]
        model.stumps = [DecisionStump(**s) for s in params["stumps"]]
        return model


def tree_rng(seed: int, index: int, n_trees: int) -> np.random.Generator:
    """Generator for the ``index``-th member of a forest seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(n_trees)[index])


class RandomForest:
    """Bagged randomized trees; the score is the fraction of trees voting deviant."""

    def __init__(self, n_trees: int = 100, max_features: Optional[int] = None, bootstrap: bool = True, seed: int = 0):
        self.n_trees = n_trees
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.seed = seed
        self.trees: List[FlatTree] = []

    def fit(self, X, y) -> "RandomForest":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        n, d = X.shape
        k = self.max_features or max(1, math.ceil(math.sqrt(d)))
        children = np.random.SeedSequence(self.seed).spawn(self.n_trees)
        self.trees = []
        for child in children:
            rng = np.random.default_rng(child)
            rows = rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            member = RandomTree(max_features=k, min_leaf=1).fit(X[rows], y[rows], rng)
            self.trees.append(member.tree)
        return self

    def votes(self, X) -> np.ndarray:
        """(n_trees, n_rows) matrix of 0/1 votes; a tree leaf at exactly 0.5 votes deviant."""
        return np.array([(t.proba(X) >= 0.5).astype(float) for t in self.trees])

    def proba(self, X) -> np.ndarray:
        return self.votes(X).mean(axis=0)

    def to_params(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_features": self.max_features,
            "bootstrap": self.bootstrap,
            "seed": self.seed,
            "trees": [t.to_params() for t in self.trees],
        }

    @classmethod
    def from_params(cls, params: dict) -> "RandomForest":
        model = cls(params["n_trees"], params["max_features"], params["bootstrap"], params["seed"])
        model.trees = [FlatTree.from_params(t) for t in params["trees"]]
        return model
