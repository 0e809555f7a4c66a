import time

import numpy as np
import pytest

from rehabkit.pipeline import build_dataset, train_segmenter
from rehabkit.synthgen import TEMPLATES, subject_sessions

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}
# fixture name -> build seconds, so acceptance runtimes can include shared setup
TIMINGS = {}


@pytest.fixture(scope="session")
def segmenter():
    """Chunk classifier trained once on 200 varied synthetic sessions."""
    t0 = time.perf_counter()
    model = train_segmenter(200, seed=0)
    TIMINGS["segmenter"] = time.perf_counter() - t0
    return model


@pytest.fixture(scope="session")
def small_segmenter():
    return train_segmenter(40, seed=1)


def subject_recordings(exercise, n_subjects=20, sessions=2, seed=500):
    """Two sessions each for ``n_subjects`` synthetic subjects with their own amplitude, tempo and noise."""
    return [
        raw
        for i in range(n_subjects)
        for raw, _ in subject_sessions(f"S{i:02d}", exercise, seed=seed + 97 * i + sorted(TEMPLATES).index(exercise), sessions=sessions)
    ]


@pytest.fixture(scope="session")
def exercise_datasets(segmenter):
    """Segmented, featurized repetitions of 20 subjects per exercise (labels from the matched ground truth)."""
    t0 = time.perf_counter()
    out = {}
    for exercise in sorted(TEMPLATES):
        ds, info = build_dataset(subject_recordings(exercise), segmenter)
        out[exercise] = (ds, info)
    TIMINGS["exercise_datasets"] = time.perf_counter() - t0
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def blobs(n=200, d=2, sep=4.0, seed=0):
    """Two Gaussian blobs with unit variance, means sep apart along every axis."""
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    X = rng.normal(size=(n, d)) + sep * y[:, None]
    return X, y


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
