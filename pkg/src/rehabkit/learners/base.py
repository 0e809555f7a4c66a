"""Datasets, training configuration and the algorithm-agnostic model wrapper."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from ..features import FeatureSchema, FeatureVector
from .ensemble import AdaBoostM1, RandomForest
from .hoeffding import HoeffdingTree
from .logistic import LogisticRegression
from .smo import LinearSMO
from .trees import C45Tree

ALGORITHMS = ("logistic", "smo", "adaboost", "random_forest", "c45", "hoeffding")
BATCH_ALGORITHMS = ALGORITHMS[:5]
ALIASES = {"rf": "random_forest", "j48": "c45"}

CLASS_NAMES = ("correct", "deviant")  # index 1 is the positive class

DEFAULTS: Dict[str, dict] = {
    "logistic": {"ridge": 1e-8, "max_iter": 200, "tol": 1e-8},
    "smo": {"C": 1.0, "tol": 1e-3},
    "adaboost": {"rounds": 10},
    "random_forest": {"n_trees": 100, "max_features": None, "bootstrap": True},
    "c45": {"confidence": 0.25, "min_leaf": 2, "prune": True},
    "hoeffding": {"delta": 1e-7, "tau": 0.05, "grace_period": 200, "n_split_points": 10},
}


def encode_labels(labels: Sequence[str]) -> np.ndarray:
    try:
        return np.array([CLASS_NAMES.index(lab) for lab in labels], dtype=int)
    except ValueError as exc:
        raise ValueError(f"labels must be one of {CLASS_NAMES}") from exc


@dataclass
class Dataset:
    """Labeled feature matrix; ``y`` is 1 for deviant, 0 for correct."""

    X: np.ndarray
    y: np.ndarray
    subjects: np.ndarray
    schema: FeatureSchema
    exercise: Optional[str] = None
    segmented_ok: Optional[np.ndarray] = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        self.subjects = np.asarray(self.subjects).astype(str)
        if self.X.ndim != 2 or self.X.shape[1] != len(self.schema):
            raise ValueError(f"X must have {len(self.schema)} columns to match the schema")
        if not (len(self.y) == len(self.subjects) == self.X.shape[0]):
            raise ValueError("X, y and subjects must have the same number of rows")
        if not np.isin(self.y, (0, 1)).all():
            raise ValueError("labels must be binary (0 = correct, 1 = deviant)")
        if self.segmented_ok is None:
            self.segmented_ok = np.ones(len(self.y), dtype=bool)
        self.segmented_ok = np.asarray(self.segmented_ok, dtype=bool)

    def __len__(self):
        return len(self.y)

    def subset(self, rows) -> "Dataset":
        return Dataset(self.X[rows], self.y[rows], self.subjects[rows], self.schema, self.exercise, self.segmented_ok[rows])

    @classmethod
    def from_vectors(cls, vectors: Sequence[FeatureVector], schema: FeatureSchema) -> "Dataset":
        bad = {v.schema_hash for v in vectors} - {schema.hash}
        if bad:
            raise ValueError(f"feature vectors with foreign schema hashes {sorted(bad)}")
        if any(v.label is None for v in vectors):
            raise ValueError("all feature vectors must be labeled")
        exercises = {v.exercise for v in vectors}
        return cls(
            X=np.array([v.values for v in vectors]).reshape(len(vectors), len(schema)),
            y=encode_labels([v.label for v in vectors]),
            subjects=np.array([v.subject_id for v in vectors]),
            schema=schema,
            exercise=exercises.pop() if len(exercises) == 1 else None,
        )


@dataclass
class TrainConfig:
    algorithm: str
    seed: int = 0
    hyperparameters: dict = field(default_factory=dict)

    def __post_init__(self):
        self.algorithm = ALIASES.get(self.algorithm, self.algorithm)
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        unknown = set(self.hyperparameters) - set(DEFAULTS[self.algorithm])
        if unknown:
            raise ValueError(f"unknown hyperparameters for {self.algorithm}: {sorted(unknown)}")

    @property
    def params(self) -> dict:
        return {**DEFAULTS[self.algorithm], **self.hyperparameters}


class Model:
    """Trained classifier bound to the feature schema it was trained on.

    ``proba`` returns the probability-like score of the deviant class; the
    predicted label is deviant when that score is >= 0.5.
    """

    def __init__(self, algorithm: str, estimator, schema_hash: str, seed: int = 0):
        self._algorithm = algorithm
        self._estimator = estimator
        self._schema_hash = schema_hash
        self._seed = seed

    algorithm = property(lambda self: self._algorithm)
    estimator = property(lambda self: self._estimator)
    schema_hash = property(lambda self: self._schema_hash)
    seed = property(lambda self: self._seed)

    def __repr__(self):
        return f"Model({self.algorithm!r}, schema={self.schema_hash}, seed={self.seed})"

    def check_schema(self, schema_hash: str) -> None:
        if schema_hash != self.schema_hash:
            raise ValueError(f"schema mismatch: model expects {self.schema_hash}, got {schema_hash}")

    def proba(self, X) -> np.ndarray:
        return np.asarray(self.estimator.proba(np.atleast_2d(np.asarray(X, dtype=float))), dtype=float)

    def predict_labels(self, X) -> np.ndarray:
        return (self.proba(X) >= 0.5).astype(int)

    def to_params(self) -> dict:
        return self.estimator.to_params()


ESTIMATOR_TYPES = {
    "logistic": LogisticRegression,
    "smo": LinearSMO,
    "adaboost": AdaBoostM1,
    "random_forest": RandomForest,
    "c45": C45Tree,
    "hoeffding": HoeffdingTree,
}


def estimator_from_params(algorithm: str, params: dict):
    return ESTIMATOR_TYPES[algorithm].from_params(params)


def train(dataset: Dataset, config: TrainConfig) -> Model:
    """Fit one of the six algorithm families on ``dataset`` (all rows, in order)."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if np.unique(dataset.y).size < 2:
        raise ValueError("degenerate labels: training data holds a single class")
    X, y, p = dataset.X, dataset.y, config.params
    algo = config.algorithm
    if algo == "logistic":
        est = LogisticRegression(p["ridge"], p["max_iter"], p["tol"]).fit(X, y)
    elif algo == "smo":
        est = LinearSMO(p["C"], p["tol"], seed=config.seed).fit(X, y)
    elif algo == "adaboost":
        est = AdaBoostM1(p["rounds"]).fit(X, y)
    elif algo == "random_forest":
        est = RandomForest(p["n_trees"], p["max_features"], p["bootstrap"], config.seed).fit(X, y)
    elif algo == "c45":
        est = C45Tree(p["confidence"], p["min_leaf"], p["prune"]).fit(X, y)
    else:
        est = HoeffdingTree(X.shape[1], p["delta"], p["tau"], p["grace_period"], p["n_split_points"]).fit(X, y)
    return Model(algo, est, dataset.schema.hash, config.seed)


def predict(model: Model, features: Union[FeatureVector, np.ndarray], schema_hash: Optional[str] = None) -> Tuple[str, float]:
    """Label and confidence of the predicted label for one feature vector."""
    if isinstance(features, FeatureVector):
        schema_hash, values = features.schema_hash, features.values
    else:
        values = features
    if schema_hash is not None:
        model.check_schema(schema_hash)
    p = float(model.proba(values)[0])
    if p >= 0.5:
        return CLASS_NAMES[1], p
    return CLASS_NAMES[0], 1.0 - p


def hoeffding_update(model: Model, instance: FeatureVector) -> Model:
    """Feed one labeled instance to a Hoeffding model (mutates and returns it)."""
    if model.algorithm != "hoeffding":
        raise ValueError("hoeffding_update requires a Hoeffding model")
    model.check_schema(instance.schema_hash)
    if instance.label is None:
        raise ValueError("instance must be labeled")
    model.estimator.update(instance.values, encode_labels([instance.label])[0])
    return model
