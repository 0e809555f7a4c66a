"""Subject-wise k-fold cross-validation and confusion-matrix metrics."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .learners import CLASS_NAMES, Dataset, TrainConfig, train

log = logging.getLogger(__name__)


@dataclass
class FoldPlan:
    k: int
    assignments: Dict[str, int]

    def __post_init__(self):
        used = set(self.assignments.values())
        if used != set(range(self.k)):
            raise ValueError("every one of the k folds must hold at least one subject")

    def fold_subjects(self, fold: int) -> List[str]:
        return sorted(s for s, f in self.assignments.items() if f == fold)


@dataclass
class Metrics:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    def __add__(self, other: "Metrics") -> "Metrics":
        return Metrics(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)

    def as_dict(self, digits: int = 4) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "accuracy": round(self.accuracy, digits),
            "precision": round(self.precision, digits),
            "recall": round(self.recall, digits),
        }


def _as_positive(label) -> bool:
    if isinstance(label, str):
        if label not in CLASS_NAMES:
            raise ValueError(f"unknown label {label!r}")
        return label == CLASS_NAMES[1]
    return bool(int(label))


def confusion_metrics(predictions: Sequence[Tuple[object, object]]) -> Metrics:
    """Confusion counts for (predicted, actual) pairs with deviant as the positive class."""
    if len(predictions) == 0:
        raise ValueError("empty input")
    tp = fp = tn = fn = 0
    for predicted, actual in predictions:
        p, a = _as_positive(predicted), _as_positive(actual)
        if p and a:
            tp += 1
        elif p:
            fp += 1
        elif a:
            fn += 1
        else:
            tn += 1
    return Metrics(tp, fp, tn, fn)


def make_subject_folds(dataset: Dataset, k: int = 5, seed: int = 0) -> FoldPlan:
    """Shuffle subjects, then hand each to the fold currently holding the fewest rows."""
    if k < 2:
        raise ValueError("k must be at least 2")
    subjects, counts = np.unique(dataset.subjects, return_counts=True)
    if subjects.size < k:
        raise ValueError(f"need at least k={k} distinct subjects, found {subjects.size}")
    order = np.random.default_rng(seed).permutation(subjects.size)
    load = np.zeros(k, dtype=int)
    assignments = {}
    for i in order:
        fold = int(np.argmin(load))
        assignments[str(subjects[i])] = fold
        load[fold] += counts[i]
    return FoldPlan(k, assignments)


@dataclass
class CVReport:
    algorithm: str
    seed: int
    folds: List[Tuple[int, Metrics]]
    pooled: Metrics
    skipped: List[dict] = field(default_factory=list)
    dataset: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "dataset": self.dataset,
            "folds": [{"fold": f, **m.as_dict()} for f, m in self.folds],
            "pooled": self.pooled.as_dict(),
            "skipped": self.skipped,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"


def cross_validate(dataset: Dataset, config: TrainConfig, plan: FoldPlan) -> CVReport:
    """Train on all folds but one, test on the held-out subjects, for every fold."""
    missing = set(np.unique(dataset.subjects)) - set(plan.assignments)
    if missing:
        raise ValueError(f"fold plan does not cover subjects {sorted(missing)}")
    data = dataset.subset(dataset.segmented_ok)
    fold_of = np.array([plan.assignments[s] for s in data.subjects], dtype=int)
    folds, skipped = [], []
    pooled = Metrics(0, 0, 0, 0)
    for f in range(plan.k):
        test = fold_of == f
        train_rows, test_rows = np.nonzero(~test)[0], np.nonzero(test)[0]
        assert not set(data.subjects[train_rows]) & set(data.subjects[test_rows])
        if test_rows.size == 0:
            skipped.append({"fold": f, "reason": "empty test split"})
            log.warning("fold %d skipped: empty test split", f)
            continue
        if np.unique(data.y[train_rows]).size < 2:
            skipped.append({"fold": f, "reason": "single-class training split"})
            log.warning("fold %d skipped: single-class training split", f)
            continue
        model = train(data.subset(train_rows), config)
        predicted = model.predict_labels(data.X[test_rows])
        m = confusion_metrics(list(zip(predicted, data.y[test_rows])))
        folds.append((f, m))
        pooled = pooled + m
    descriptor = {
        "rows": int(len(data)),
        "subjects": int(np.unique(data.subjects).size),
        "features": int(data.X.shape[1]),
        "schema": data.schema.hash,
        "exercise": data.exercise,
    }
    return CVReport(config.algorithm, config.seed, folds, pooled, skipped, descriptor)
