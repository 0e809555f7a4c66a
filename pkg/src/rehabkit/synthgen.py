"""Synthetic single-IMU exercise sessions with exact ground truth.

Each repetition is a raised-cosine lobe ``A(1 - cos(2*pi*t/T))/2`` on the
template's active channels, optionally held at its peak. Amplitudes and noise
levels are expressed as fractions of the sensor full-scale range
(2 g for the accelerometer, 500 deg/s for the gyroscope by default).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .signal import CHANNELS, EXERCISES, LABELS, SAMPLED_CHANNELS, Channel, DeviceConfig, RawRecording


@dataclass(frozen=True)
class ExerciseTemplate:
    exercise: str
    amplitudes: Mapping[Channel, float]
    duration_s: float
    deviation_scale: float
    deviation_channel: Channel
    deviation_amplitude: float

    def __post_init__(self):
        if self.exercise not in EXERCISES:
            raise ValueError(f"unknown exercise {self.exercise!r}")
        amps = {Channel(k): float(v) for k, v in dict(self.amplitudes).items()}
        if not amps or any(c not in SAMPLED_CHANNELS for c in amps):
            raise ValueError("active channels must be sampled channels")
        if any(a <= 0 for a in amps.values()) or self.deviation_amplitude < 0 or self.deviation_scale <= 0:
            raise ValueError("amplitudes must be positive")
        if not 1.0 <= self.duration_s <= 10.0:
            raise ValueError("duration_s must lie in [1, 10] seconds")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "deviation_channel", Channel(self.deviation_channel))


# Shank rotation in the sagittal plane dominates GX and tilts the gravity vector
# across AY/AZ; deviations leak into an off-plane channel.
TEMPLATES: Dict[str, ExerciseTemplate] = {
    "HS": ExerciseTemplate("HS", {Channel.GX: 0.60, Channel.AY: 0.15, Channel.AZ: 0.05}, 4.0, 0.75, Channel.GZ, 0.12),
    "SKE": ExerciseTemplate("SKE", {Channel.GX: 0.70, Channel.AY: 0.25}, 3.0, 0.60, Channel.GY, 0.06),
    "IRQ": ExerciseTemplate("IRQ", {Channel.GX: 0.55, Channel.AY: 0.08}, 2.5, 0.85, Channel.AX, 0.10),
    "SLR": ExerciseTemplate("SLR", {Channel.GX: 0.60, Channel.AZ: 0.15, Channel.GY: 0.05}, 3.5, 0.80, Channel.GY, 0.10),
}


@dataclass
class SessionSpec:
    template: ExerciseTemplate
    label_pattern: Sequence[str]
    rep_count: Optional[int] = None
    pause_range: Tuple[float, float] = (1.0, 2.0)
    hold_range: Tuple[float, float] = (0.0, 0.0)
    noise_sigma: float = 0.0
    vibration: Optional[Tuple[float, float]] = None  # (frequency Hz, amplitude)
    seed: int = 0
    subject_id: str = "synthetic"
    amplitude_scale: float = 1.0
    duration_jitter: float = 0.0
    rep_scales: Optional[Sequence[float]] = None
    device: DeviceConfig = field(default_factory=DeviceConfig)

    def __post_init__(self):
        self.label_pattern = list(self.label_pattern)
        if self.rep_count is None:
            self.rep_count = len(self.label_pattern)
        if self.rep_count != len(self.label_pattern):
            raise ValueError("rep_count must equal len(label_pattern)")
        bad = [lab for lab in self.label_pattern if lab not in LABELS]
        if bad:
            raise ValueError(f"unknown labels {bad}")
        for name in ("pause_range", "hold_range"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise ValueError(f"{name} must be a non-negative interval")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if self.rep_scales is not None and len(self.rep_scales) != self.rep_count:
            raise ValueError("rep_scales must have one entry per repetition")

    @classmethod
    def clean(cls, exercise: str, reps: int = 10, **kwargs) -> "SessionSpec":
        return cls(TEMPLATES[exercise], ["correct"] * reps, **kwargs)

    @classmethod
    def fatigue(cls, exercise: str, labels: Sequence[str], **kwargs) -> "SessionSpec":
        """Long/variable pauses and isometric holds at the repetition peak."""
        kwargs.setdefault("pause_range", (0.5, 5.0))
        kwargs.setdefault("hold_range", (1.0, 3.0))
        return cls(TEMPLATES[exercise], list(labels), **kwargs)


@dataclass
class GroundTruth:
    boundaries: List[Tuple[int, int]]  # half-open [start, end) sample ranges
    labels: List[str]


def lobe(n_half: int, n_hold: int) -> np.ndarray:
    """Unit raised-cosine lobe of 2*n_half samples with n_hold extra samples held at its peak."""
    phase = np.arange(2 * n_half) / (2 * n_half)
    shape = 0.5 * (1.0 - np.cos(2 * np.pi * phase))
    return np.concatenate([shape[:n_half], np.ones(n_hold), shape[n_half:]])


def synth_repetition(
    template: ExerciseTemplate,
    label: str,
    hold_s: float,
    rng: np.random.Generator,
    device: DeviceConfig = DeviceConfig(),
    amplitude_scale: float = 1.0,
    duration_jitter: float = 0.0,
) -> Dict[Channel, np.ndarray]:
    """One noise-free repetition for each sampled channel, baselines included."""
    if label not in LABELS:
        raise ValueError(f"unknown label {label!r}")
    fs = device.sampling_rate_hz
    duration = template.duration_s
    if duration_jitter:
        duration *= 1.0 + rng.uniform(-duration_jitter, duration_jitter)
    n_half = max(2, int(round(duration * fs / 2)))
    n_hold = int(round(max(hold_s, 0.0) * fs))
    shape = lobe(n_half, n_hold)
    scale = amplitude_scale * (template.deviation_scale if label == "deviant" else 1.0)
    out = {}
    for channel in SAMPLED_CHANNELS:
        amp = template.amplitudes.get(channel, 0.0) * scale
        if label == "deviant" and channel == template.deviation_channel:
            amp += template.deviation_amplitude * amplitude_scale
        out[channel] = device.baselines[channel] + amp * device.full_scale(channel) * shape
    return out


def synth_session(spec: SessionSpec) -> Tuple[RawRecording, GroundTruth]:
    """Concatenate pauses and repetitions, then add noise and vibration."""
    rng = np.random.default_rng(spec.seed)
    device = spec.device
    fs = device.sampling_rate_hz
    base = np.array([device.baselines[c] for c in SAMPLED_CHANNELS])

    def pause():
        n = int(round(rng.uniform(*spec.pause_range) * fs))
        return np.tile(base, (n, 1))

    pieces = [pause()]
    cursor = len(pieces[0])
    bounds = []
    for k, label in enumerate(spec.label_pattern):
        hold = rng.uniform(*spec.hold_range)
        scale = spec.amplitude_scale * (1.0 if spec.rep_scales is None else spec.rep_scales[k])
        rep = synth_repetition(spec.template, label, hold, rng, device, scale, spec.duration_jitter)
        block = np.column_stack([rep[c] for c in SAMPLED_CHANNELS])
        pieces.append(block)
        bounds.append((cursor, cursor + len(block)))
        cursor += len(block)
        gap = pause()
        pieces.append(gap)
        cursor += len(gap)
    data = np.vstack(pieces)
    n = len(data)
    t = np.arange(n) / fs
    full_scale = np.array([device.full_scale(c) for c in SAMPLED_CHANNELS])
    if spec.noise_sigma > 0:
        data = data + rng.normal(0.0, spec.noise_sigma, size=data.shape) * full_scale
    if spec.vibration is not None:
        freq, amp = spec.vibration
        phase = rng.uniform(0, 2 * np.pi, size=len(SAMPLED_CHANNELS))
        data = data + amp * full_scale * np.sin(2 * np.pi * freq * t[:, None] + phase)
    raw = RawRecording(
        samples=np.column_stack([t, data]),
        subject_id=spec.subject_id,
        exercise=spec.template.exercise,
        device=device,
        rep_labels=list(spec.label_pattern),
        ground_truth_bounds=bounds,
    )
    return raw, GroundTruth(boundaries=bounds, labels=list(spec.label_pattern))


def mixed_labels(reps: int, rng: np.random.Generator) -> List[str]:
    """Random correct/deviant pattern with both labels present when reps >= 2."""
    labels = ["correct"] * (reps - reps // 2) + ["deviant"] * (reps // 2)
    return [labels[i] for i in rng.permutation(reps)]


def subject_sessions(
    subject_id: str,
    exercise: str,
    seed: int,
    sessions: int = 2,
    reps: int = 10,
    fatigue: bool = False,
) -> List[Tuple[RawRecording, GroundTruth]]:
    """Sessions for one synthetic subject with subject-specific amplitude, tempo and noise."""
    rng = np.random.default_rng(seed)
    amplitude_scale = rng.uniform(0.85, 1.15)
    noise_sigma = rng.uniform(0.003, 0.012)
    template = TEMPLATES[exercise]
    template = replace(template, duration_s=float(np.clip(template.duration_s * rng.uniform(0.85, 1.15), 1.0, 10.0)))
    out = []
    for s in range(sessions):
        labels = mixed_labels(reps, rng)
        kwargs = dict(
            noise_sigma=noise_sigma,
            seed=int(rng.integers(2**31)),
            subject_id=subject_id,
            amplitude_scale=amplitude_scale,
            duration_jitter=0.05,
        )
        if fatigue:
            kwargs.update(pause_range=(0.5, 5.0), hold_range=(1.0, 3.0))
        out.append(synth_session(SessionSpec(template, labels, **kwargs)))
    return out


def template_sessions(count: int, seed: int = 0, fatigue_fraction: float = 0.5, reps: int = 10):
    """Varied labeled sessions (all exercises, clean and fatigue) for harvesting chunk templates.

    Yields ``(raw, boundaries)`` pairs.
    """
    rng = np.random.default_rng(seed)
    exercises = list(TEMPLATES)
    for i in range(count):
        exercise = exercises[i % len(exercises)]
        labels = mixed_labels(reps, rng)
        kwargs = dict(noise_sigma=float(rng.uniform(0.0, 0.015)), seed=int(rng.integers(2**31)))
        if rng.random() < fatigue_fraction:
            spec = SessionSpec.fatigue(exercise, labels, **kwargs)
        else:
            spec = SessionSpec(TEMPLATES[exercise], labels, **kwargs)
        raw, truth = synth_session(spec)
        yield raw, truth.boundaries
