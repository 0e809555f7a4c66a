"""Glue between segmentation, feature extraction and the repetition classifiers."""
from __future__ import annotations

from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .features import REPETITION_SCHEMA, FeatureVector, repetition_feature_vector
from .learners import Dataset, Model
from .segmentation import (
    SegmentationConfig,
    SegmentationResult,
    chunk_templates,
    match_repetitions,
    select_cut_points,
    train_chunk_classifier,
)
from .signal import ProcessedRecording, RawRecording, preprocess
from .synthgen import template_sessions


def train_segmenter(sessions: int = 200, seed: int = 0, config: Optional[SegmentationConfig] = None) -> Model:
    """Chunk classifier trained on templates harvested from synthetic sessions."""
    X, y = chunk_templates(template_sessions(sessions, seed), config, seed)
    return train_chunk_classifier(X, y)


def repetition_vectors(
    processed: ProcessedRecording,
    result: SegmentationResult,
    tol: int = 25,
) -> List[Tuple[FeatureVector, bool]]:
    """Feature vectors of the detected repetitions.

    When the recording carries ground truth, each vector is labeled from the
    true repetition it matches and flagged as correctly segmented; unmatched
    detections are returned unlabeled and flagged False.
    """
    truth = processed.ground_truth_bounds
    labels = processed.rep_labels
    owner = {}
    if truth is not None:
        for t_idx, d_idx in enumerate(match_repetitions(result.repetitions, truth, tol)):
            if d_idx is not None:
                owner[d_idx] = t_idx
    out = []
    for i, (start, end) in enumerate(result.repetitions):
        label = None
        if i in owner and labels is not None:
            label = labels[owner[i]]
        fv = repetition_feature_vector(
            processed.slice(start, end),
            label=label,
            subject_id=processed.subject_id,
            exercise=processed.exercise,
            bounds=(start, end),
        )
        out.append((fv, i in owner))
    return out


def build_dataset(
    recordings: Iterable[RawRecording],
    segmenter: Model,
    config: Optional[SegmentationConfig] = None,
    seed: int = 0,
    cutoff_hz: float = 5.0,
) -> Tuple[Dataset, dict]:
    """Segment labeled recordings and stack the correctly segmented repetitions.

    Returns the dataset plus counts of true and detected repetitions per
    recording (for the segmentation accuracy).
    """
    config = config or SegmentationConfig()
    vectors, ok, cases = [], [], []
    for raw in recordings:
        processed = preprocess(raw, cutoff_hz)
        result = select_cut_points(processed, segmenter, config, seed)
        cases.append((len(raw.ground_truth_bounds or []), len(result.repetitions)))
        for fv, matched in repetition_vectors(processed, result):
            if matched and fv.label is not None:
                vectors.append(fv)
                ok.append(True)
    dataset = Dataset.from_vectors(vectors, REPETITION_SCHEMA)
    dataset.segmented_ok = np.asarray(ok, dtype=bool)
    return dataset, {"cases": cases}
