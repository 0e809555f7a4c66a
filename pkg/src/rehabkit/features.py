"""Per-repetition static and dynamic features over the nine processed channels."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .signal import CHANNELS, Channel

SCHEMA_VERSION = "rehabkit-features/1"

N_POINTS = 256  # resampled transform length
N_COEFFS = 20
N_FRAMES = 10

STATIC_NAMES = (
    "mean",
    "median",
    "std",
    "variance",
    "range",
    "kurtosis",
    "skewness",
    "max",
    "min",
    "positive_mean",
    "negative_mean",
    "sum_abs_diff",
    "q1",
    "q3",
)
DYNAMIC_NAMES = (
    "energy",
    "energy_ratio",
    "energy_average",
    "harmonic_ratio",
    "energy_entropy",
) + tuple(f"fft_{k}" for k in range(1, N_COEFFS + 1))


@dataclass(frozen=True)
class FeatureSchema:
    names: Tuple[Tuple[str, str], ...]
    version: str = SCHEMA_VERSION

    def __len__(self):
        return len(self.names)

    @property
    def columns(self) -> List[str]:
        return [f"{ch}_{name}" for ch, name in self.names]

    @property
    def hash(self) -> str:
        digest = hashlib.sha256(self.version.encode())
        for ch, name in self.names:
            digest.update(f"|{ch}:{name}".encode())
        return digest.hexdigest()[:16]

    @classmethod
    def generic(cls, n_features: int, version: str = "generic/1") -> "FeatureSchema":
        """Schema for an anonymous numeric matrix with ``n_features`` columns."""
        return cls(tuple(("x", str(i)) for i in range(n_features)), version)


def repetition_schema() -> FeatureSchema:
    names = []
    for channel in CHANNELS:
        names.extend((channel.value, n) for n in STATIC_NAMES + DYNAMIC_NAMES)
    names.append((Channel.PITCH.value, "pitch_roll_correlation"))
    names.append((Channel.ROLL.value, "pitch_roll_correlation"))
    return FeatureSchema(tuple(names))


REPETITION_SCHEMA = repetition_schema()


@dataclass
class FeatureVector:
    values: np.ndarray
    schema_hash: str = REPETITION_SCHEMA.hash
    label: Optional[str] = None
    subject_id: str = "unknown"
    exercise: str = "HS"
    bounds: Optional[Tuple[int, int]] = None


def _check(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("empty input")
    return x


def moments(x: np.ndarray) -> Tuple[float, float, float]:
    """Population std, skewness and non-excess kurtosis; skew/kurt are 0 for constant input."""
    scale = np.ptp(x)
    if scale == 0:
        return 0.0, 0.0, 0.0
    d = (x - x.mean()) / scale  # skew/kurt are scale free; this avoids underflow
    m2 = np.mean(d**2)
    if m2 == 0:
        return 0.0, 0.0, 0.0
    m3 = np.mean(d**3)
    m4 = np.mean(d**4)
    return float(scale * np.sqrt(m2)), float(m3 / m2**1.5), float(m4 / m2**2)


def resample(x: np.ndarray, n_points: int = N_POINTS) -> np.ndarray:
    """Linear-interpolation resampling onto ``n_points`` equally spaced positions."""
    if x.size == 1:
        return np.full(n_points, x[0])
    return np.interp(np.linspace(0.0, x.size - 1, n_points), np.arange(x.size), x)


def spectrum(x: np.ndarray) -> np.ndarray:
    """Magnitudes of bins 0..N_POINTS/2 of the resampled transform, divided by N_POINTS.

    A constant input has exactly zero non-DC content (no rounding residue).
    """
    r = resample(x)
    if np.ptp(r) == 0:
        out = np.zeros(N_POINTS // 2 + 1)
        out[0] = abs(r[0])
        return out
    return np.abs(np.fft.rfft(r)) / N_POINTS


def spectral_coefficients(x) -> np.ndarray:
    return spectrum(_check(x))[1 : N_COEFFS + 1]


def static_features(signal) -> np.ndarray:
    x = _check(signal)
    std, skew, kurt = moments(x)
    mean = x.mean()
    centered = x - mean
    pos = centered[centered > 0]
    neg = centered[centered < 0]
    q1, median, q3 = np.quantile(x, [0.25, 0.5, 0.75])
    return np.array(
        [
            mean,
            median,
            std,
            std**2,
            x.max() - x.min(),
            kurt,
            skew,
            x.max(),
            x.min(),
            pos.mean() if pos.size else 0.0,
            neg.mean() if neg.size else 0.0,
            np.abs(np.diff(x)).sum(),
            q1,
            q3,
        ]
    )


def dynamic_features(signal) -> np.ndarray:
    x = _check(signal)
    energy = float(np.sum(x**2))
    mag = spectrum(x)
    power = mag[1:] ** 2  # bins 1..N/2
    total = power.sum()
    low = power[: N_POINTS // 8].sum()
    energy_ratio = low / total if total > 0 else 0.0
    if total > 0:
        f0 = int(np.argmax(power)) + 1
        harmonics = [h * f0 for h in (1, 2, 3) if h * f0 <= N_POINTS // 2]
        harmonic_ratio = sum(power[h - 1] for h in harmonics) / total
    else:
        harmonic_ratio = 0.0
    entropy = 0.0
    if energy > 0:
        for frame in np.array_split(x, N_FRAMES):
            e = np.sum(frame**2) / energy
            if e > 0:
                entropy -= e * np.log2(e)
    head = [energy, energy_ratio, energy / x.size, harmonic_ratio, entropy]
    return np.concatenate([head, mag[1 : N_COEFFS + 1]])


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation, 0 when either input is constant."""
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        return 0.0
    da, db = (a - a.mean()) / np.ptp(a), (b - b.mean()) / np.ptp(b)
    den = np.sqrt(np.sum(da**2) * np.sum(db**2))
    if den == 0:
        return 0.0
    r = np.sum(da * db) / den
    return float(np.clip(r, -1.0, 1.0))


def repetition_feature_vector(
    repetition: Mapping[Channel, np.ndarray],
    label: Optional[str] = None,
    subject_id: str = "unknown",
    exercise: str = "HS",
    bounds: Optional[Tuple[int, int]] = None,
) -> FeatureVector:
    """Concatenate static + dynamic features per channel plus the pitch/roll correlation."""
    slices = {Channel(k): _check(v) for k, v in repetition.items()}
    missing = [c.value for c in CHANNELS if c not in slices]
    if missing:
        raise ValueError(f"missing channels {missing}")
    lengths = {v.size for v in slices.values()}
    if len(lengths) != 1:
        raise ValueError(f"channel slices differ in length: {sorted(lengths)}")
    parts = []
    for channel in CHANNELS:
        parts.append(static_features(slices[channel]))
        parts.append(dynamic_features(slices[channel]))
    r = pearson(slices[Channel.PITCH], slices[Channel.ROLL])
    parts.append([r, r])
    values = np.concatenate(parts)
    return FeatureVector(values, REPETITION_SCHEMA.hash, label, subject_id, exercise, bounds)


def check_feature_invariants(values: np.ndarray) -> None:
    """Assert the per-channel consistency relations of a repetition feature vector."""
    width = len(STATIC_NAMES) + len(DYNAMIC_NAMES)
    idx = {n: i for i, n in enumerate(STATIC_NAMES + DYNAMIC_NAMES)}
    for k in range(len(CHANNELS)):
        f = values[k * width : (k + 1) * width]
        tol = 1e-12 * max(1.0, abs(f[idx["max"]]), abs(f[idx["min"]]))
        assert f[idx["min"]] - tol <= f[idx["mean"]] <= f[idx["max"]] + tol
        assert f[idx["q1"]] <= f[idx["median"]] + tol and f[idx["median"]] <= f[idx["q3"]] + tol
        assert np.isclose(f[idx["variance"]], f[idx["std"]] ** 2, rtol=1e-12, atol=1e-15)
        assert np.isclose(f[idx["range"]], f[idx["max"]] - f[idx["min"]], rtol=1e-12, atol=1e-15)
        assert -1e-12 <= f[idx["energy_entropy"]] <= np.log2(N_FRAMES) + 1e-12
        assert -1e-12 <= f[idx["energy_ratio"]] <= 1 + 1e-12
        assert -1e-12 <= f[idx["harmonic_ratio"]] <= 1 + 1e-12
