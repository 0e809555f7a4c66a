import numpy as np
import pytest

from rehabkit.signal import SAMPLED_CHANNELS, Channel, DeviceConfig
from rehabkit.synthgen import (
    TEMPLATES,
    ExerciseTemplate,
    SessionSpec,
    lobe,
    mixed_labels,
    subject_sessions,
    synth_repetition,
    synth_session,
    template_sessions,
)

DEV = DeviceConfig()


def test_correct_peak_closed_form():
    tpl = TEMPLATES["HS"]
    rep = synth_repetition(tpl, "correct", 0.0, np.random.default_rng(0))
    for ch, amp in tpl.amplitudes.items():
        assert rep[ch].max() == DEV.baselines[ch] + amp * DEV.full_scale(ch)
    assert np.all(rep[Channel.GZ] == 0.0)


def test_hold_plateau_length():
    rep = synth_repetition(TEMPLATES["SKE"], "correct", 2.0, np.random.default_rng(0))
    gx = rep[Channel.GX]
    near = np.abs(gx - gx.max()) <= 0.01 * abs(gx.max())
    runs = np.diff(np.flatnonzero(np.diff(np.concatenate([[0], near.astype(int), [0]]))))[::2]
    assert runs.max() >= 204


def test_deviant_half_amplitude():
    tpl = ExerciseTemplate("IRQ", {Channel.GX: 0.4}, 2.0, 0.5, Channel.AX, 0.1)
    rep = synth_repetition(tpl, "deviant", 0.0, np.random.default_rng(0))
    assert rep[Channel.GX].max() == pytest.approx(0.2 * DEV.full_scale(Channel.GX))
    assert rep[Channel.AX].max() == pytest.approx(0.1 * DEV.full_scale(Channel.AX))


def test_lobe_shape():
    x = lobe(50, 10)
    assert x.size == 110 and x[0] == 0.0 and x.max() == 1.0
    assert np.all(x[50:60] == 1.0)


def test_session_has_ten_boundaries():
    raw, truth = synth_session(SessionSpec.clean("HS", 10, seed=3))
    assert len(truth.boundaries) == 10 and len(truth.labels) == 10
    assert raw.ground_truth_bounds == truth.boundaries


def test_session_bit_identical():
    spec = SessionSpec.fatigue("SLR", ["correct", "deviant"] * 5, noise_sigma=0.01, vibration=(12, 0.01), seed=11)
    a, _ = synth_session(spec)
    b, _ = synth_session(spec)
    assert a.samples.tobytes() == b.samples.tobytes()


def test_noise_free_pauses_exact_baseline():
    raw, truth = synth_session(SessionSpec.fatigue("IRQ", ["deviant", "correct"] * 3, seed=5))
    inside = np.zeros(len(raw), bool)
    for s, e in truth.boundaries:
        inside[s:e] = True
    base = np.array([DEV.baselines[c] for c in SAMPLED_CHANNELS])
    assert np.all(raw.samples[~inside, 1:] == base)


@pytest.mark.parametrize("exercise", sorted(TEMPLATES))
def test_sample_count_and_disjoint_bounds(exercise):
    spec = SessionSpec.fatigue(exercise, ["correct"] * 8, seed=21)
    raw, truth = synth_session(spec)
    rep_samples = sum(e - s for s, e in truth.boundaries)
    starts = [0] + [e for _, e in truth.boundaries]
    ends = [s for s, _ in truth.boundaries] + [len(raw)]
    pause_samples = sum(e - s for s, e in zip(starts, ends))
    assert rep_samples + pause_samples == len(raw)
    assert all(e > s for s, e in zip(starts, ends))  # every pause non-empty
    assert all(a[1] < b[0] for a, b in zip(truth.boundaries, truth.boundaries[1:]))


def test_spec_validation():
    with pytest.raises(ValueError):
        SessionSpec(TEMPLATES["HS"], ["correct"], rep_count=2)
    with pytest.raises(ValueError):
        SessionSpec(TEMPLATES["HS"], ["maybe"])
    with pytest.raises(ValueError):
        SessionSpec(TEMPLATES["HS"], ["correct"], pause_range=(2, 1))
    with pytest.raises(ValueError):
        ExerciseTemplate("HS", {Channel.GX: 0.5}, 12.0, 0.5, Channel.GY, 0.1)
    with pytest.raises(ValueError):
        ExerciseTemplate("HS", {Channel.MAG: 0.5}, 2.0, 0.5, Channel.GY, 0.1)


def test_mixed_labels_balanced():
    labels = mixed_labels(10, np.random.default_rng(0))
    assert labels.count("deviant") == 5


def test_subject_sessions_share_subject():
    sessions = subject_sessions("S07", "SKE", seed=1, sessions=2)
    assert [r.subject_id for r, _ in sessions] == ["S07", "S07"]
    assert sessions[0][0].samples.shape != sessions[1][0].samples.shape or not np.array_equal(
        sessions[0][0].samples, sessions[1][0].samples
    )


def test_template_sessions_cover_exercises():
    seen = {raw.exercise for raw, _ in template_sessions(8, seed=0)}
    assert seen == set(TEMPLATES)
