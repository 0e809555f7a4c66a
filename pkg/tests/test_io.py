import json

import numpy as np
import pytest

from rehabkit import io
from rehabkit.features import REPETITION_SCHEMA, FeatureSchema
from rehabkit.learners import Dataset, TrainConfig, predict, train
from rehabkit.pipeline import repetition_vectors
from rehabkit.segmentation import segment
from rehabkit.signal import preprocess
from rehabkit.synthgen import SessionSpec, subject_sessions, synth_session

from conftest import blobs


@pytest.fixture
def recording(tmp_path):
    raw, _ = synth_session(SessionSpec.fatigue("SLR", ["correct", "deviant", "deviant"], noise_sigma=0.01, seed=3))
    return raw, io.save_recording(raw, tmp_path / "rec.csv")


def test_recording_round_trip_bit_exact(recording):
    raw, path = recording
    back = io.load_recording(path)
    assert back.samples.tobytes() == raw.samples.tobytes()
    assert back.rep_labels == raw.rep_labels
    assert back.ground_truth_bounds == [tuple(b) for b in raw.ground_truth_bounds]
    assert back.subject_id == raw.subject_id and back.exercise == raw.exercise
    assert back.device == raw.device


def test_six_columns_names_line(recording):
    _, path = recording
    lines = path.read_text().splitlines()
    lines[7] = ",".join(lines[7].split(",")[:6])
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(io.DataError, match=r"rec.csv:8: malformed row"):
        io.load_recording(path)


def test_non_numeric_names_line(recording):
    _, path = recording
    lines = path.read_text().splitlines()
    lines[3] = "a,b,c,d,e,f,g"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(io.DataError, match=r":4: malformed"):
        io.load_recording(path)


def test_duplicate_timestamp(recording):
    _, path = recording
    lines = path.read_text().splitlines()
    t_prev = lines[10].split(",")[0]
    lines[11] = ",".join([t_prev] + lines[11].split(",")[1:])
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(io.DataError, match="non-monotonic"):
        io.load_recording(path)


def test_missing_sidecar(recording):
    _, path = recording
    io.sidecar_path(path).unlink()
    with pytest.raises(io.DataError, match="sidecar"):
        io.load_recording(path)


def test_bad_header(recording):
    _, path = recording
    text = path.read_text().replace("t,ax", "time,ax", 1)
    path.write_text(text)
    with pytest.raises(io.DataError, match="header"):
        io.load_recording(path)


def generic_dataset(X, y):
    return Dataset(X, y, np.arange(len(y)) % 5, FeatureSchema.generic(X.shape[1]))


@pytest.mark.parametrize("algo", ["logistic", "smo", "adaboost", "random_forest", "c45", "hoeffding"])
def test_model_round_trip_probe(tmp_path, algo):
    X, y = blobs(600, d=4, sep=1.0, seed=1)
    model = train(generic_dataset(X, y), TrainConfig(algo, seed=5))
    path = io.save_model(model, tmp_path / "m.model")
    back = io.load_model(path)
    probe = np.random.default_rng(0).normal(scale=3, size=(1000, 4))
    np.testing.assert_array_equal(back.proba(probe), model.proba(probe))
    assert (back.algorithm, back.schema_hash, back.seed) == (model.algorithm, model.schema_hash, model.seed)
    assert io.dump_model(back) == path.read_text()


def test_model_version_and_truncation(tmp_path):
    X, y = blobs(100)
    text = io.dump_model(train(generic_dataset(X, y), TrainConfig("c45")))
    assert text.splitlines()[0] == "REHABKIT-MODEL v1"
    p = tmp_path / "m.model"
    p.write_text(text.replace("REHABKIT-MODEL v1", "REHABKIT-MODEL v0", 1))
    with pytest.raises(io.ModelError, match="version"):
        io.load_model(p)
    p.write_text(text[: len(text) // 2])
    with pytest.raises(io.ModelError, match="truncated"):
        io.load_model(p)
    p.write_text("hello\n")
    with pytest.raises(io.ModelError):
        io.load_model(p)
    with pytest.raises(io.ModelError, match="no such"):
        io.load_model(tmp_path / "absent.model")


def test_loaded_model_schema_check(tmp_path):
    X, y = blobs(100)
    model = train(generic_dataset(X, y), TrainConfig("random_forest"))
    back = io.load_model(io.save_model(model, tmp_path / "m.model"))
    with pytest.raises(ValueError, match="schema mismatch"):
        predict(back, X[0], schema_hash=REPETITION_SCHEMA.hash)


def test_feature_table_round_trip(tmp_path, small_segmenter):
    raw, _ = synth_session(SessionSpec.clean("HS", noise_sigma=0.01, seed=1))
    processed = preprocess(raw)
    vectors = [fv for fv, _ in repetition_vectors(processed, segment(raw, small_segmenter))]
    path = io.save_features(vectors, REPETITION_SCHEMA, tmp_path / "f.csv")
    back = io.load_features(path, REPETITION_SCHEMA)
    assert len(back) == len(vectors) == 10
    for a, b in zip(vectors, back):
        assert a.values.tobytes() == b.values.tobytes()
        assert (a.label, a.subject_id, a.bounds) == (b.label, b.subject_id, b.bounds)


def test_svg_markers():
    svg = io.render_svg(np.sin(np.linspace(0, 10, 500)), [10, 200, 450], title="HS")
    assert svg.startswith("<svg") and svg.count("<line") == 3 and "<polyline" in svg


@pytest.fixture(scope="module")
def hs_classifier(exercise_datasets, tmp_path_factory):
    ds, _ = exercise_datasets["HS"]
    path = tmp_path_factory.mktemp("models") / "hs_rf.model"
    return io.save_model(train(ds, TrainConfig("rf")), path)


@pytest.fixture(scope="module")
def segmenter_file(segmenter, tmp_path_factory):
    return io.save_model(segmenter, tmp_path_factory.mktemp("models") / "seg.model")


def test_pipeline_clean_session(tmp_path, segmenter_file, hs_classifier):
    # a subject not in the training set
    for k, (raw, truth) in enumerate(subject_sessions("NEW", "HS", seed=99, sessions=3)):
        rec = io.save_recording(raw, tmp_path / f"new{k}.csv")
        doc = io.run_pipeline(rec, segmenter_file, hs_classifier, plot_path=tmp_path / f"new{k}.svg")
        assert doc["summary"]["detected"] == 10
        got = [r["label"] for r in doc["repetitions"]]
        assert sum(a == b for a, b in zip(got, truth.labels)) >= 9
        assert doc["summary"]["correct_count"] + doc["summary"]["deviant_count"] == 10
        assert (tmp_path / f"new{k}.svg").read_text().count("<line") == 20


def test_pipeline_silent(tmp_path, segmenter_file, hs_classifier):
    raw, _ = synth_session(SessionSpec.clean("HS", reps=0, pause_range=(20, 20), noise_sigma=0.005))
    rec = io.save_recording(raw, tmp_path / "silent.csv")
    doc = io.run_pipeline(rec, segmenter_file, hs_classifier)
    assert doc["summary"]["detected"] == 0 and doc["summary"]["warnings"]


def test_pipeline_missing_model(tmp_path, segmenter_file, recording):
    _, rec = recording
    with pytest.raises(io.StageError) as info:
        io.run_pipeline(rec, segmenter_file, tmp_path / "nope.model")
    assert info.value.stage == "load_model" and info.value.exit_code == 3


def test_pipeline_classifier_schema_guard(tmp_path, segmenter_file, recording):
    _, rec = recording
    with pytest.raises(io.StageError) as info:
        io.run_pipeline(rec, segmenter_file, segmenter_file)
    assert info.value.stage == "load_model" and "schema" in str(info.value)
