"""Raw/processed IMU recordings, derived channels, filtering and normalization."""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import signal as sps

STANDARD_GRAVITY = 9.80665

EXERCISES = ("HS", "SKE", "IRQ", "SLR")
LABELS = ("correct", "deviant")


class Channel(str, enum.Enum):
    AX = "AX"
    AY = "AY"
    AZ = "AZ"
    GX = "GX"
    GY = "GY"
    GZ = "GZ"
    MAG = "MAG"
    PITCH = "PITCH"
    ROLL = "ROLL"

    @property
    def derived(self) -> bool:
        return self in (Channel.MAG, Channel.PITCH, Channel.ROLL)


SAMPLED_CHANNELS = (Channel.AX, Channel.AY, Channel.AZ, Channel.GX, Channel.GY, Channel.GZ)
CHANNELS = tuple(Channel)


@dataclass(frozen=True)
class DeviceConfig:
    """Sensor configuration kept constant across a recording campaign.

    ``baselines`` holds the value each sampled channel reads when only gravity
    acts on the sensor, in channel units (m/s^2, deg/s).
    """

    sampling_rate_hz: float = 102.4
    accel_range_g: float = 2.0
    gyro_range_dps: float = 500.0
    baselines: Mapping[Channel, float] = field(
        default_factory=lambda: {
            Channel.AX: 0.0,
            Channel.AY: 0.0,
            Channel.AZ: STANDARD_GRAVITY,
            Channel.GX: 0.0,
            Channel.GY: 0.0,
            Channel.GZ: 0.0,
        }
    )

    def __post_init__(self):
        if not self.sampling_rate_hz > 0:
            raise ValueError("sampling_rate_hz must be positive")
        if self.accel_range_g <= 0 or self.gyro_range_dps <= 0:
            raise ValueError("sensor ranges must be positive")
        baselines = {Channel(k): float(v) for k, v in dict(self.baselines).items()}
        missing = [c.value for c in SAMPLED_CHANNELS if c not in baselines]
        if missing:
            raise ValueError(f"missing baselines for {missing}")
        object.__setattr__(self, "baselines", baselines)

    def full_scale(self, channel: Channel) -> float:
        """Full-scale range of a sampled channel in channel units."""
        if channel in (Channel.AX, Channel.AY, Channel.AZ):
            return self.accel_range_g * STANDARD_GRAVITY
        if channel in (Channel.GX, Channel.GY, Channel.GZ):
            return self.gyro_range_dps
        raise ValueError(f"{channel} is not a sampled channel")


@dataclass
class RawRecording:
    """Timestamped 6-axis samples plus subject/device metadata.

    ``samples`` is an (N, 7) array with columns t, ax, ay, az, gx, gy, gz.
    """

    samples: np.ndarray
    subject_id: str = "unknown"
    exercise: str = "HS"
    device: DeviceConfig = field(default_factory=DeviceConfig)
    rep_labels: Optional[Sequence[str]] = None
    ground_truth_bounds: Optional[Sequence[Tuple[int, int]]] = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2 or self.samples.shape[1] != 7:
            raise ValueError("samples must have shape (N, 7)")
        if self.exercise not in EXERCISES:
            raise ValueError(f"unknown exercise {self.exercise!r}")
        if self.rep_labels is not None:
            bad = [lab for lab in self.rep_labels if lab not in LABELS]
            if bad:
                raise ValueError(f"unknown labels {bad}")

    def __len__(self):
        return self.samples.shape[0]

    @property
    def t(self) -> np.ndarray:
        return self.samples[:, 0]

    def channel(self, channel: Channel) -> np.ndarray:
        return self.samples[:, 1 + SAMPLED_CHANNELS.index(Channel(channel))]

    def validate(self) -> None:
        """Check timestamp monotonicity/spacing and ground-truth bounds."""
        if len(self) == 0:
            raise ValueError("empty input")
        t = self.t
        if len(t) > 1:
            dt = np.diff(t)
            if np.any(dt <= 0):
                raise ValueError("non-monotonic timestamps")
            nominal = 1.0 / self.device.sampling_rate_hz
            if np.any(np.abs(dt - nominal) > 0.01 * nominal):
                raise ValueError("timestamp spacing deviates more than 1% from 1/sampling_rate_hz")
        if self.ground_truth_bounds is not None:
            prev_end = -1
            for start, end in self.ground_truth_bounds:
                if not (0 <= start < end <= len(self)) or start < prev_end:
                    raise ValueError("ground-truth bounds must be sorted and non-overlapping")
                prev_end = end


@dataclass
class ProcessedRecording:
    """Nine filtered, min-max normalized signal vectors."""

    vectors: Dict[Channel, np.ndarray]
    provenance: dict
    subject_id: str = "unknown"
    exercise: str = "HS"
    device: DeviceConfig = field(default_factory=DeviceConfig)
    rep_labels: Optional[Sequence[str]] = None
    ground_truth_bounds: Optional[Sequence[Tuple[int, int]]] = None

    def __len__(self):
        return len(next(iter(self.vectors.values())))

    def __getitem__(self, channel) -> np.ndarray:
        return self.vectors[Channel(channel)]

    def slice(self, start: int, end: int) -> Dict[Channel, np.ndarray]:
        return {c: self.vectors[c][start:end] for c in CHANNELS}

    def baseline_normalized(self, channel) -> float:
        """Image of the device baseline for ``channel`` under this recording's normalization."""
        channel = Channel(channel)
        b = self.device.baselines
        if channel == Channel.MAG:
            axes = self.provenance["magnitude_source"]
            keys = (Channel.GX, Channel.GY, Channel.GZ) if axes == "gyro" else (Channel.AX, Channel.AY, Channel.AZ)
            value = float(np.sqrt(sum(b[k] ** 2 for k in keys)))
        elif channel == Channel.PITCH:
            value = float(np.arctan2(-b[Channel.AX], np.hypot(b[Channel.AY], b[Channel.AZ])))
        elif channel == Channel.ROLL:
            value = float(np.arctan2(b[Channel.AY], b[Channel.AZ]))
        else:
            value = b[channel]
        lo, hi = self.provenance["bounds"][channel.value]
        if hi == lo:
            return 0.0
        return (value - lo) / (hi - lo)


def derive_channels(raw: RawRecording, magnitude_source: str = "gyro") -> Dict[Channel, np.ndarray]:
    """Return all nine channel vectors: six sampled ones plus MAG, PITCH and ROLL.

    MAG is the Euclidean norm of the gyroscope axes by default
    (``magnitude_source="accel"`` uses the accelerometer). PITCH and ROLL are
    gravity-vector angles in radians.
    """
    if len(raw) == 0:
        raise ValueError("empty input")
    out = {c: raw.channel(c).copy() for c in SAMPLED_CHANNELS}
    ax, ay, az = out[Channel.AX], out[Channel.AY], out[Channel.AZ]
    if magnitude_source == "gyro":
        vx, vy, vz = out[Channel.GX], out[Channel.GY], out[Channel.GZ]
    elif magnitude_source == "accel":
        vx, vy, vz = ax, ay, az
    else:
        raise ValueError(f"magnitude_source must be 'gyro' or 'accel', got {magnitude_source!r}")
    out[Channel.MAG] = np.sqrt(vx**2 + vy**2 + vz**2)
    out[Channel.PITCH] = np.arctan2(-ax, np.sqrt(ay**2 + az**2))
    out[Channel.ROLL] = np.arctan2(ay, az)
    return {c: out[c] for c in CHANNELS}


def butter_design(cutoff_hz: float, order: int, fs_hz: float) -> np.ndarray:
    """Second-order sections of a digital lowpass Butterworth filter."""
    if order < 1 or int(order) != order:
        raise ValueError("order must be a positive integer")
    if not 0 < cutoff_hz < fs_hz / 2:
        raise ValueError(f"cutoff {cutoff_hz} Hz must lie in (0, Nyquist={fs_hz / 2} Hz)")
    return _butter_sos(float(cutoff_hz), int(order), float(fs_hz)).copy()


@functools.lru_cache(maxsize=32)
def _butter_sos(cutoff_hz: float, order: int, fs_hz: float) -> np.ndarray:
    return sps.butter(order, cutoff_hz, btype="low", fs=fs_hz, output="sos")


def butterworth_lowpass(
    signal: np.ndarray,
    cutoff_hz: float,
    order: int = 4,
    fs_hz: float = 102.4,
    zero_phase: bool = True,
) -> np.ndarray:
    """Lowpass Butterworth filter.

    With ``zero_phase`` the filter runs forward and backward over the signal,
    padded on both ends by odd reflection about the edge value (3*order
    samples), and the result is averaged with the backward-then-forward run.
    Otherwise a single causal pass is applied with initial conditions set to
    the steady state of the first sample.
    """
    x = np.asarray(signal, dtype=float)
    sos = butter_design(cutoff_hz, order, fs_hz)
    if x.ndim != 1 or x.size < 3 * order:
        raise ValueError(f"signal too short: need at least {3 * order} samples for order {order}")
    if zero_phase:
        padlen = min(3 * order, x.size - 1)
        forward_backward = sps.sosfiltfilt(sos, x, padtype="odd", padlen=padlen)
        # averaging with the backward-forward pass makes the output commute
        # exactly with time reversal; the pass-start transients otherwise differ
        backward_forward = sps.sosfiltfilt(sos, x[::-1], padtype="odd", padlen=padlen)[::-1]
        return 0.5 * (forward_backward + backward_forward)
    zi = sps.sosfilt_zi(sos) * x[0]
    y, _ = sps.sosfilt(sos, x, zi=zi)
    return y


def minmax_normalize(signal: np.ndarray) -> np.ndarray:
    """Rescale to [0, 1]; a constant input maps to all zeros."""
    x = np.asarray(signal, dtype=float)
    if x.size == 0:
        raise ValueError("empty input")
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.zeros_like(x)
    return np.clip((x - lo) / (hi - lo), 0.0, 1.0)


def preprocess(
    raw: RawRecording,
    cutoff_hz: float = 5.0,
    order: int = 4,
    magnitude_source: str = "gyro",
) -> ProcessedRecording:
    """Derive, lowpass-filter and min-max normalize all nine channels."""
    raw.validate()
    fs = raw.device.sampling_rate_hz
    vectors, bounds = {}, {}
    for channel, vec in derive_channels(raw, magnitude_source).items():
        filtered = butterworth_lowpass(vec, cutoff_hz, order, fs)
        bounds[channel.value] = (float(filtered.min()), float(filtered.max()))
        vectors[channel] = minmax_normalize(filtered)
    provenance = {
        "cutoff_hz": float(cutoff_hz),
        "order": int(order),
        "zero_phase": True,
        "magnitude_source": magnitude_source,
        "bounds": bounds,
    }
    return ProcessedRecording(
        vectors=vectors,
        provenance=provenance,
        subject_id=raw.subject_id,
        exercise=raw.exercise,
        device=raw.device,
        rep_labels=None if raw.rep_labels is None else list(raw.rep_labels),
        ground_truth_bounds=None if raw.ground_truth_bounds is None else [tuple(b) for b in raw.ground_truth_bounds],
    )
