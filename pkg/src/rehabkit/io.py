"""On-disk formats: recordings (CSV + JSON sidecar), model files, feature tables, SVG plots.

Model file layout (UTF-8 text, one field per line)::

    REHABKIT-MODEL v1
    algorithm: <id>
    schema: <16 hex chars>
    seed: <int>
    params:
    <single-line JSON object, keys sorted>
    END

Floats in the JSON block are written with Python's shortest round-trip repr,
so save/load reproduces parameters bit for bit.
"""
from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from .features import FeatureSchema, FeatureVector
from .learners import ALGORITHMS, Model, estimator_from_params
from .signal import SAMPLED_CHANNELS, Channel, DeviceConfig, RawRecording

log = logging.getLogger(__name__)

MAGIC = "REHABKIT-MODEL v1"
CSV_HEADER = ("t", "ax", "ay", "az", "gx", "gy", "gz")

PathLike = Union[str, Path]


class RehabkitError(Exception):
    exit_code = 1


class DataError(RehabkitError, ValueError):
    exit_code = 2


class ModelError(RehabkitError, ValueError):
    exit_code = 3


class StageError(RehabkitError):
    """Failure of one pipeline stage; keeps the stage name and the exit code of the cause."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 2)
        super().__init__(f"stage error {stage!r}: {cause}")


# -- recordings --------------------------------------------------------------


def sidecar_path(path: PathLike) -> Path:
    return Path(path).with_suffix(".json")


def save_recording(raw: RawRecording, path: PathLike) -> Path:
    """Write ``<name>.csv`` plus the ``<name>.json`` sidecar."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for row in raw.samples.tolist():
            fh.write(",".join(repr(v) for v in row) + "\n")
    meta = {
        "subject_id": raw.subject_id,
        "exercise": raw.exercise,
        "sampling_rate_hz": raw.device.sampling_rate_hz,
        "accel_range_g": raw.device.accel_range_g,
        "gyro_range_dps": raw.device.gyro_range_dps,
        "baselines": {c.value: raw.device.baselines[c] for c in SAMPLED_CHANNELS},
    }
    if raw.rep_labels is not None:
        meta["rep_labels"] = list(raw.rep_labels)
    if raw.ground_truth_bounds is not None:
        meta["ground_truth_bounds"] = [[int(s), int(e)] for s, e in raw.ground_truth_bounds]
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def _parse_rows(path: Path) -> np.ndarray:
    rows = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        if tuple(h.strip().lower() for h in header) != CSV_HEADER:
            raise DataError(f"{path}:1: expected header {','.join(CSV_HEADER)}")
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise DataError(f"{path}:{line}: malformed row, expected 7 columns, found {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise DataError(f"{path}:{line}: malformed row, non-numeric value") from None
    return np.array(rows, dtype=float).reshape(-1, 7)


def load_recording(path: PathLike) -> RawRecording:
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    side = sidecar_path(path)
    if not side.exists():
        raise DataError(f"{path}: missing sidecar {side.name}")
    try:
        meta = json.loads(side.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{side}: invalid sidecar: {exc}") from None
    samples = _parse_rows(path)
    try:
        device = DeviceConfig(
            sampling_rate_hz=float(meta.get("sampling_rate_hz", 102.4)),
            accel_range_g=float(meta.get("accel_range_g", 2.0)),
            gyro_range_dps=float(meta.get("gyro_range_dps", 500.0)),
            **({"baselines": meta["baselines"]} if "baselines" in meta else {}),
        )
        bounds = meta.get("ground_truth_bounds")
        raw = RawRecording(
            samples,
            subject_id=str(meta.get("subject_id", "unknown")),
            exercise=meta.get("exercise", "HS"),
            device=device,
            rep_labels=meta.get("rep_labels"),
            ground_truth_bounds=[tuple(b) for b in bounds] if bounds is not None else None,
        )
        raw.validate()
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    return raw


# -- models ------------------------------------------------------------------


def dump_model(model: Model) -> str:
    params = json.dumps(model.to_params(), sort_keys=True, separators=(",", ":"))
    return "\n".join(
        [MAGIC, f"algorithm: {model.algorithm}", f"schema: {model.schema_hash}", f"seed: {model.seed}", "params:", params, "END", ""]
    )


def parse_model(text: str, source: str = "<model>") -> Model:
    lines = text.split("\n")
    if not lines or not lines[0].startswith("REHABKIT-MODEL"):
        raise ModelError(f"{source}: not a model file (bad magic)")
    if lines[0].strip() != MAGIC:
        raise ModelError(f"{source}: unsupported model version {lines[0].strip()!r}, expected {MAGIC!r}")
    if len(lines) < 7 or lines[6].strip() != "END":
        raise ModelError(f"{source}: truncated model file")
    fields = {}
    for line, key in zip(lines[1:4], ("algorithm", "schema", "seed")):
        name, _, value = line.partition(":")
        if name.strip() != key:
            raise ModelError(f"{source}: expected field {key!r}, found {line!r}")
        fields[key] = value.strip()
    if lines[4].strip() != "params:":
        raise ModelError(f"{source}: expected 'params:' line")
    if fields["algorithm"] not in ALGORITHMS:
        raise ModelError(f"{source}: unknown algorithm {fields['algorithm']!r}")
    try:
        params = json.loads(lines[5])
        estimator = estimator_from_params(fields["algorithm"], params)
        seed = int(fields["seed"])
    except (ValueError, KeyError, TypeError) as exc:
        raise ModelError(f"{source}: corrupt parameter block: {exc}") from None
    return Model(fields["algorithm"], estimator, fields["schema"], seed)


def save_model(model: Model, path: PathLike) -> Path:
    path = Path(path)
    path.write_text(dump_model(model))
    return path


def load_model(path: PathLike) -> Model:
    path = Path(path)
    if not path.exists():
        raise ModelError(f"{path}: no such model file")
    return parse_model(path.read_text(), str(path))


# -- feature tables ----------------------------------------------------------


def save_features(vectors: Sequence[FeatureVector], schema: FeatureSchema, path: PathLike) -> Path:
    """CSV with subject_id, exercise, label, start, end followed by the schema columns."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["subject_id", "exercise", "label", "start", "end"] + schema.columns)
        for v in vectors:
            if v.schema_hash != schema.hash:
                raise DataError("feature vector schema does not match the table schema")
            start, end = v.bounds if v.bounds is not None else ("", "")
            writer.writerow([v.subject_id, v.exercise, v.label or "", start, end] + [repr(x) for x in v.values.tolist()])
    path.with_suffix(".schema.json").write_text(
        json.dumps({"version": schema.version, "hash": schema.hash, "columns": schema.columns}, indent=2) + "\n"
    )
    return path


def load_features(path: PathLike, schema: FeatureSchema) -> List[FeatureVector]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    out = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[5:] != schema.columns:
            raise DataError(f"{path}: header does not match feature schema {schema.hash}")
        for row in reader:
            if len(row) != len(header):
                raise DataError(f"{path}:{reader.line_num}: malformed row")
            try:
                values = np.array([float(x) for x in row[5:]])
                bounds = (int(row[3]), int(row[4])) if row[3] else None
            except ValueError:
                raise DataError(f"{path}:{reader.line_num}: malformed row, non-numeric value") from None
            out.append(FeatureVector(values, schema.hash, row[2] or None, row[0], row[1], bounds))
    return out


# -- plots -------------------------------------------------------------------


def render_svg(signal: np.ndarray, cut_points: Iterable[int], width: int = 900, height: int = 260, title: str = "") -> str:
    """Static SVG line plot of one channel with vertical markers at the cut points."""
    x = np.asarray(signal, dtype=float)
    n = max(x.size - 1, 1)
    lo, hi = (float(x.min()), float(x.max())) if x.size else (0.0, 1.0)
    span = hi - lo if hi > lo else 1.0
    pad = 20
    w, h = width - 2 * pad, height - 2 * pad

    def px(i):
        return pad + w * i / n

    def py(v):
        return pad + h * (1 - (v - lo) / span)

    step = max(1, x.size // 2000)
    points = " ".join(f"{px(i):.2f},{py(v):.2f}" for i, v in zip(range(0, x.size, step), x[::step]))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<polyline fill="none" stroke="#1f4e79" stroke-width="1" points="{points}"/>',
    ]
    for c in cut_points:
        parts.append(f'<line x1="{px(c):.2f}" y1="{pad}" x2="{px(c):.2f}" y2="{pad + h}" stroke="#c0392b" stroke-width="1"/>')
    if title:
        parts.append(f'<text x="{pad}" y="{pad - 6}" font-family="sans-serif" font-size="12">{title}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# -- end to end --------------------------------------------------------------


def run_pipeline(
    recording_path: PathLike,
    segmenter_path: PathLike,
    classifier_path: PathLike,
    config=None,
    seed: int = 0,
    cutoff_hz: float = 5.0,
    plot_path: Optional[PathLike] = None,
) -> dict:
    """Load, preprocess, segment, extract features and classify every detected repetition.

    Failures are re-raised as :class:`StageError` naming the stage.
    """
    from .features import REPETITION_SCHEMA
    from .pipeline import repetition_vectors
    from .segmentation import SegmentationConfig, select_cut_points
    from .signal import preprocess

    def stage(name, fn, *args):
        try:
            return fn(*args)
        except Exception as exc:  # noqa: BLE001 - re-raised with the stage attached
            raise StageError(name, exc) from exc

    config = config or SegmentationConfig()
    raw = stage("load_recording", load_recording, recording_path)
    segmenter = stage("load_model", load_model, segmenter_path)
    classifier = stage("load_model", load_model, classifier_path)
    stage("load_model", classifier.check_schema, REPETITION_SCHEMA.hash)
    processed = stage("preprocess", preprocess, raw, cutoff_hz)
    result = stage("segment", select_cut_points, processed, segmenter, config, seed)
    vectors = stage("features", repetition_vectors, processed, result)
    verdicts = []
    for fv, _ in vectors:
        p = float(stage("classify", classifier.proba, fv.values)[0])
        label = "deviant" if p >= 0.5 else "correct"
        verdicts.append({"start": int(fv.bounds[0]), "end": int(fv.bounds[1]), "label": label, "score": round(p, 6)})
    summary = {
        "detected": len(verdicts),
        "correct_count": sum(v["label"] == "correct" for v in verdicts),
        "deviant_count": sum(v["label"] == "deviant" for v in verdicts),
        "warnings": list(result.warnings),
    }
    if plot_path is not None:
        svg = render_svg(processed[config.channel], result.cut_points, title=f"{raw.subject_id} {raw.exercise} {config.channel.value}")
        Path(plot_path).write_text(svg)
    return {
        "recording": Path(recording_path).name,
        "subject_id": raw.subject_id,
        "exercise": raw.exercise,
        "repetitions": verdicts,
        "summary": summary,
    }
