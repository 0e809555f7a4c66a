"""Template-matching repetition segmentation.

Pipeline: zero-velocity samples -> 1-D k-means over their indices -> chunks
between (possibly non-adjacent) candidate points -> chunk classifier ->
non-overlapping confidence-weighted selection of repetition chunks.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .features import N_COEFFS, FeatureSchema, moments, spectral_coefficients
from .learners import Dataset, HoeffdingTree, Model, TrainConfig, train
from .signal import Channel, ProcessedRecording, RawRecording, preprocess

log = logging.getLogger(__name__)

CHUNK_FEATURE_NAMES = ("length", "height", "std", "skewness", "kurtosis") + tuple(f"fft_{k}" for k in range(1, N_COEFFS + 1))
CHUNK_SCHEMA = FeatureSchema(tuple(("chunk", n) for n in CHUNK_FEATURE_NAMES), "rehabkit-chunk/1")


@dataclass
class SegmentationConfig:
    channel: Channel = Channel.MAG
    feature_channel: Optional[Channel] = None  # defaults to ``channel``
    zero_vel_threshold: float = 0.05
    dwell_samples: int = 26
    variance_threshold: float = 1e-4
    k_range: Tuple[int, int] = (2, 40)
    expected_reps: Optional[int] = None
    min_chunk_samples: int = 51
    max_chunk_samples: int = 1536
    max_skip: int = 2
    kmeans_max_iter: int = 100

    def __post_init__(self):
        self.channel = Channel(self.channel)
        self.feature_channel = Channel(self.feature_channel or self.channel)
        lo, hi = self.k_range
        if not 1 <= lo <= hi:
            raise ValueError("k_range must be a non-empty interval of positive integers")
        if not self.min_chunk_samples < self.max_chunk_samples:
            raise ValueError("min_chunk_samples must be below max_chunk_samples")
        if self.zero_vel_threshold <= 0 or self.variance_threshold <= 0 or self.dwell_samples < 1:
            raise ValueError("thresholds and dwell_samples must be positive")
        if self.expected_reps is not None and self.expected_reps < 1:
            raise ValueError("expected_reps must be positive")


@dataclass
class CandidateSet:
    zero_velocity_indices: np.ndarray
    centroids: np.ndarray
    labels: np.ndarray  # cluster of each zero-velocity index, ordered like ``centroids``
    k: int
    inertia: dict = field(default_factory=dict)  # k -> within-cluster sum of squares


@dataclass
class Chunk:
    start_index: int
    end_index: int
    features: np.ndarray
    verdict: Optional[str] = None
    confidence: float = 0.0


@dataclass
class SegmentationResult:
    cut_points: List[int]
    repetitions: List[Tuple[int, int]]
    rejected_chunks: int = 0
    chunks: List[Chunk] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "cut_points": [int(c) for c in self.cut_points],
            "repetitions": [[int(s), int(e)] for s, e in self.repetitions],
            "rejected": int(self.rejected_chunks),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict()) + "\n"


# -- zero-velocity detection -------------------------------------------------


def detect_zero_velocity(signal, config: SegmentationConfig, baseline: float = 0.0) -> np.ndarray:
    """Indices whose centered dwell window stays near ``baseline`` with low variance."""
    x = np.asarray(signal, dtype=float)
    w = config.dwell_samples
    if x.size < w:
        raise ValueError(f"signal shorter than the dwell window ({x.size} < {w})")
    windows = sliding_window_view(x, w)
    near = np.max(np.abs(windows - baseline), axis=1) < config.zero_vel_threshold
    quiet = windows.var(axis=1) < config.variance_threshold
    return np.nonzero(near & quiet)[0] + w // 2


# -- 1-D k-means -------------------------------------------------------------


@dataclass
class KMeansResult:
    centroids: np.ndarray
    labels: np.ndarray
    inertia: float
    history: List[float]


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [x[rng.integers(x.size)]]
    d2 = (x - centers[0]) ** 2
    tmp = np.empty_like(x)
    for _ in range(1, k):
        cdf = np.cumsum(d2)
        if cdf[-1] <= 0:
            centers.append(x[rng.integers(x.size)])
            continue
        i = min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), x.size - 1)
        centers.append(x[i])
        np.subtract(x, x[i], out=tmp)
        np.square(tmp, out=tmp)
        np.minimum(d2, tmp, out=d2)
    return np.sort(np.asarray(centers, dtype=float))


def _assign(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return np.searchsorted(0.5 * (centers[1:] + centers[:-1]), x, side="left")


def kmeans_1d(values, k: int, rng: np.random.Generator, max_iter: int = 100) -> KMeansResult:
    """Lloyd's algorithm on scalars with k-means++ seeding.

    On sorted scalars every cluster is a contiguous run, so the partition is
    kept as k - 1 cut positions and cluster sums come from one prefix sum.
    ``history`` holds the objective after every update step; it never increases.
    """
    x = np.sort(np.asarray(values, dtype=float))
    if x.size < k:
        raise ValueError(f"insufficient candidates: {x.size} points for k={k}")
    csum = np.concatenate([[0.0], np.cumsum(x)])
    ids = np.arange(k)

    def bounds(c):
        # cluster j holds x[b[j]:b[j + 1]], matching _assign's tie rule
        return np.concatenate([[0], np.searchsorted(x, 0.5 * (c[1:] + c[:-1]), side="right"), [x.size]])

    centers = _kmeans_pp(x, k, rng)
    b = bounds(centers)
    history = []
    for _ in range(max_iter):
        counts = np.diff(b)
        sums = csum[b[1:]] - csum[b[:-1]]
        centers = np.where(counts > 0, sums / np.maximum(counts, 1), centers)
        history.append(float(np.sum((x - np.repeat(centers, counts)) ** 2)))
        order = np.argsort(centers, kind="stable")
        centers = centers[order]
        new = bounds(centers)
        if np.array_equal(order, ids):
            same = np.array_equal(new, b)
        else:
            same = np.array_equal(np.repeat(ids, np.diff(new)), np.repeat(np.argsort(order), counts))
        b = new
        if same:
            break
    labels = np.repeat(ids, np.diff(b))
    inertia = float(np.sum((x - centers[labels]) ** 2))
    return KMeansResult(centers, labels, inertia, history)


def elbow_k(inertia: dict, k_lo: int, k_hi: int) -> int:
    """k with the largest relative drop of within-cluster sum of squares.

    The drop ratio W[k-1]/W[k] is measured against (k/(k-1))^2, the ratio
    produced by structureless (uniformly spread) data, so that the coarse
    splits every data set admits do not masquerade as an elbow.
    """
    best_k, best_drop = k_lo, -np.inf
    for k in range(max(k_lo, 2), k_hi + 1):
        prev, cur = inertia[k - 1], inertia[k]
        if cur <= 0:
            if prev > 0 and best_drop < np.inf:
                best_k = k
            break
        drop = (prev / cur) * ((k - 1) / k) ** 2
        if drop > best_drop:
            best_k, best_drop = k, drop
    return best_k


def cluster_candidates(indices, config: SegmentationConfig, seed: int = 0) -> CandidateSet:
    """Cluster zero-velocity indices; one centroid per presumed silent window."""
    x = np.sort(np.asarray(indices, dtype=float))
    if x.size < 2:
        raise ValueError("insufficient candidates: need at least 2 zero-velocity indices")
    inertia = {}

    def run(k):
        res = kmeans_1d(x, k, np.random.default_rng([seed, k]), config.kmeans_max_iter)
        inertia[k] = res.inertia
        return res

    if config.expected_reps is not None:
        k = config.expected_reps + 1
        if x.size < k:
            raise ValueError(f"insufficient candidates: {x.size} points for k={k}")
        result = run(k)
    else:
        lo, hi = config.k_range
        hi = min(hi, np.unique(x).size)
        lo = min(lo, hi)
        results = {k: run(k) for k in range(max(lo - 1, 1), hi + 1)}
        k = elbow_k(inertia, lo, hi) if hi > lo or lo > 1 else lo
        result = results[k]
    centers, labels = result.centroids, result.labels
    used = np.unique(labels)
    remap = np.full(centers.size, -1)
    remap[used] = np.arange(used.size)
    return CandidateSet(
        zero_velocity_indices=x.astype(int),
        centroids=centers[used],
        labels=remap[labels],
        k=int(k),
        inertia=inertia,
    )


# -- chunk features and classifier ------------------------------------------


def chunk_feature_vector(signal_slice) -> np.ndarray:
    """length, height, std, skewness, kurtosis and 20 spectral magnitudes of one chunk."""
    x = np.asarray(signal_slice, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("empty input")
    std, skew, kurt = moments(x)
    return np.concatenate([[x.size, x.max() - x.min(), std, skew, kurt], spectral_coefficients(x)])


def train_chunk_classifier(X, y, hyperparameters: Optional[dict] = None) -> Model:
    """Single-pass Hoeffding tree over chunk features (1 = repetition) in the given order."""
    ds = Dataset(np.asarray(X, dtype=float), np.asarray(y, dtype=int), np.zeros(len(y), dtype=int), CHUNK_SCHEMA)
    return train(ds, TrainConfig("hoeffding", hyperparameters=hyperparameters or {}))


def candidate_points(candidates: CandidateSet) -> np.ndarray:
    return np.unique(np.rint(candidates.centroids).astype(int))


def enumerate_chunks(points: np.ndarray, config: SegmentationConfig) -> List[Tuple[int, int]]:
    """Candidate pairs skipping at most ``max_skip`` intermediate points, within the length bounds."""
    out = []
    for i in range(points.size):
        for j in range(i + 1, min(i + config.max_skip + 2, points.size)):
            span = points[j] - points[i]
            if config.min_chunk_samples <= span <= config.max_chunk_samples:
                out.append((int(points[i]), int(points[j])))
    return out


def refine_bounds(start: int, end: int, zero_velocity: np.ndarray) -> Tuple[int, int]:
    """Active span of a chunk: the widest gap between its silent samples."""
    lo, hi = np.searchsorted(zero_velocity, [start, end], side="left")
    marks = np.concatenate([[start], zero_velocity[lo:hi], [end]])
    gaps = np.diff(marks)
    g = int(np.argmax(gaps))
    return int(marks[g]), int(marks[g + 1])


def weighted_interval_schedule(intervals: Sequence[Tuple[int, int]], weights: Sequence[float]) -> List[int]:
    """Indices of a maximum-weight set of intervals that pairwise overlap at most at an endpoint.

    On equal total weight the selection reached first in (end, start) order wins,
    which favours earlier starts.
    """
    n = len(intervals)
    if n == 0:
        return []
    order = sorted(range(n), key=lambda i: (intervals[i][1], intervals[i][0]))
    ends = [intervals[i][1] for i in order]
    best = [0.0] * (n + 1)
    take = [False] * n
    prev = [0] * n
    for pos, i in enumerate(order):
        s = intervals[i][0]
        p = int(np.searchsorted(ends, s, side="right"))
        p = min(p, pos)
        prev[pos] = p
        with_it = weights[i] + best[p]
        if with_it > best[pos]:
            best[pos + 1] = with_it
            take[pos] = True
        else:
            best[pos + 1] = best[pos]
    chosen = []
    pos = n - 1
    while pos >= 0:
        if take[pos]:
            chosen.append(order[pos])
            pos = prev[pos] - 1
        else:
            pos -= 1
    return sorted(chosen, key=lambda i: intervals[i][0])


def _detection_inputs(processed: ProcessedRecording, config: SegmentationConfig):
    signal = processed[config.channel]
    baseline = processed.baseline_normalized(config.channel)
    return signal, detect_zero_velocity(signal, config, baseline)


def select_cut_points(processed: ProcessedRecording, model: Model, config: SegmentationConfig, seed: int = 0) -> SegmentationResult:
    """Detect, cluster, classify chunks and keep a non-overlapping set of repetitions."""
    model.check_schema(CHUNK_SCHEMA.hash)
    signal, zv = _detection_inputs(processed, config)
    if zv.size < 2:
        log.warning("no zero-velocity candidates found")
        return SegmentationResult([], [], 0, [], ["no candidates"])
    try:
        candidates = cluster_candidates(zv, config, seed)
    except ValueError as exc:
        log.warning("clustering failed: %s", exc)
        return SegmentationResult([], [], 0, [], [f"no candidates: {exc}"])
    pairs = enumerate_chunks(candidate_points(candidates), config)
    if not pairs:
        return SegmentationResult([], [], 0, [], ["no chunk within the length bounds"])
    feature_signal = processed[config.feature_channel]
    X = np.array([chunk_feature_vector(feature_signal[s:e]) for s, e in pairs])
    p = model.proba(X)
    chunks = []
    for (s, e), f, pi in zip(pairs, X, p):
        positive = pi > 0.5
        chunks.append(Chunk(s, e, f, "repetition" if positive else "non_repetition", float(pi if positive else 1 - pi)))
    positive_idx = [i for i, c in enumerate(chunks) if c.verdict == "repetition"]
    chosen = weighted_interval_schedule([pairs[i] for i in positive_idx], [chunks[i].confidence for i in positive_idx])
    selected = [positive_idx[i] for i in chosen]
    reps = [refine_bounds(*pairs[i], zv) for i in selected]
    cuts = sorted({b for rep in reps for b in rep})
    warnings = [] if reps else ["classifier rejected all chunks"]
    return SegmentationResult(cuts, reps, len(chunks) - len(positive_idx), chunks, warnings)


def segment(raw: RawRecording, model: Model, config: Optional[SegmentationConfig] = None, seed: int = 0, cutoff_hz: float = 5.0) -> SegmentationResult:
    return select_cut_points(preprocess(raw, cutoff_hz), model, config or SegmentationConfig(), seed)


# -- templates ---------------------------------------------------------------


def label_chunk(start: int, end: int, truth: Sequence[Tuple[int, int]], tol: int = 25) -> int:
    """1 when exactly one true repetition lies inside the chunk and no other one overlaps it."""
    inside = 0
    for s, e in truth:
        overlap = min(end, e) - max(start, s)
        if overlap <= tol:
            continue
        if s >= start - tol and e <= end + tol:
            inside += 1
        else:
            return 0
    return int(inside == 1)


def chunk_templates(
    recordings: Iterable[Tuple[RawRecording, Sequence[Tuple[int, int]]]],
    config: Optional[SegmentationConfig] = None,
    seed: int = 0,
    cutoff_hz: float = 5.0,
) -> Tuple[np.ndarray, np.ndarray]:
    """Labeled chunk features harvested from recordings with known repetition bounds.

    Rows come back shuffled (seeded) so they can be streamed to the Hoeffding tree.
    """
    config = config or SegmentationConfig()
    rows, labels = [], []
    for raw, truth in recordings:
        processed = preprocess(raw, cutoff_hz)
        signal, zv = _detection_inputs(processed, config)
        if zv.size < 2:
            continue
        candidates = cluster_candidates(zv, config, seed)
        feature_signal = processed[config.feature_channel]
        for s, e in enumerate_chunks(candidate_points(candidates), config):
            rows.append(chunk_feature_vector(feature_signal[s:e]))
            labels.append(label_chunk(s, e, truth))
    X = np.array(rows).reshape(len(rows), len(CHUNK_FEATURE_NAMES))
    y = np.array(labels, dtype=int)
    perm = np.random.default_rng(seed).permutation(len(y))
    return X[perm], y[perm]


# -- metrics -----------------------------------------------------------------


def segmentation_accuracy(cases: Sequence[Tuple[int, int]]) -> float:
    """sum(reps - |reps - segm|) / sum(reps) over (reps, segm) pairs, without clamping."""
    if len(cases) == 0:
        raise ValueError("empty input")
    num = den = 0
    for reps, segm in cases:
        if reps <= 0 or segm < 0:
            raise ValueError("reps must be positive and segm non-negative")
        num += reps - abs(reps - segm)
        den += reps
    return num / den


def match_repetitions(detected: Sequence[Tuple[int, int]], truth: Sequence[Tuple[int, int]], tol: int = 25) -> List[Optional[int]]:
    """For each true repetition, the index of a detected one with both bounds within ``tol`` (else None)."""
    out, used = [], set()
    for s, e in truth:
        hit = None
        for i, (ds, de) in enumerate(detected):
            if i not in used and abs(ds - s) <= tol and abs(de - e) <= tol:
                hit = i
                used.add(i)
                break
        out.append(hit)
    return out
