"""Command-line front end: ``rehabkit <command> --help`` lists every option with its default."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import io
from .evaluation import cross_validate, make_subject_folds
from .features import REPETITION_SCHEMA
from .learners import BATCH_ALGORITHMS, Dataset, TrainConfig, train
from .pipeline import repetition_vectors, train_segmenter
from .segmentation import SegmentationConfig, chunk_templates, select_cut_points, train_chunk_classifier
from .signal import CHANNELS, EXERCISES, preprocess
from .synthgen import TEMPLATES, SessionSpec, mixed_labels, subject_sessions, synth_session

log = logging.getLogger("rehabkit")

EVAL_ALGOS = ("logistic", "smo", "adaboost", "rf", "c45")
TRAIN_ALGOS = EVAL_ALGOS + ("hoeffding", "segmenter")


class UsageError(io.RehabkitError):
    exit_code = 1


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def load_config(path: Optional[str]) -> dict:
    """JSON document with optional sections ``preprocess``, ``segmentation`` and ``hyperparameters``."""
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path}: {exc}") from None
    unknown = set(cfg) - {"preprocess", "segmentation", "hyperparameters"}
    if unknown:
        raise UsageError(f"config file {path}: unknown sections {sorted(unknown)}")
    return cfg


def segmentation_config(cfg: dict) -> SegmentationConfig:
    section = dict(cfg.get("segmentation", {}))
    if "k_range" in section:
        section["k_range"] = tuple(section["k_range"])
    try:
        return SegmentationConfig(**section)
    except TypeError as exc:
        raise UsageError(f"segmentation config: {exc}") from None


def cutoff(cfg: dict) -> float:
    return float(cfg.get("preprocess", {}).get("cutoff_hz", 5.0))


def recording_paths(inputs: Sequence[str]) -> List[Path]:
    out = []
    for item in inputs:
        p = Path(item)
        out.extend(sorted(p.glob("*.csv")) if p.is_dir() else [p])
    if not out:
        raise io.DataError("no recordings given")
    return out


def write_text(path: str, text: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)


# -- commands ----------------------------------------------------------------


def cmd_synth(args, cfg):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    exercises = EXERCISES if args.exercise == "all" else (args.exercise,)
    rng = np.random.default_rng(args.seed)
    written = []
    for exercise in exercises:
        for s in range(args.subjects):
            subject = f"S{s + 1:02d}"
            if args.subjects > 1 or args.per_subject:
                sessions = subject_sessions(subject, exercise, int(rng.integers(2**31)), args.sessions, args.reps, args.fatigue)
            else:
                sessions = []
                for _ in range(args.sessions):
                    labels = ["correct"] * args.reps if args.labels == "correct" else mixed_labels(args.reps, rng)
                    kw = dict(noise_sigma=args.noise, seed=int(rng.integers(2**31)), subject_id=subject)
                    if args.fatigue:
                        spec = SessionSpec.fatigue(exercise, labels, **kw)
                    else:
                        spec = SessionSpec(TEMPLATES[exercise], labels, **kw)
                    sessions.append(synth_session(spec))
            for n, (raw, _) in enumerate(sessions, 1):
                written.append(io.save_recording(raw, out / f"{subject}_{exercise}_{n:02d}.csv"))
    print(f"wrote {len(written)} recordings to {out}")


def cmd_preprocess(args, cfg):
    raw = io.load_recording(args.recording)
    processed = preprocess(raw, cutoff(cfg))
    lines = ["index," + ",".join(c.value for c in CHANNELS)]
    cols = np.column_stack([processed[c] for c in CHANNELS])
    for i, row in enumerate(cols.tolist()):
        lines.append(f"{i}," + ",".join(repr(v) for v in row))
    write_text(args.out, "\n".join(lines) + "\n")
    prov = {k: v for k, v in processed.provenance.items()}
    write_text(str(Path(args.out).with_suffix(".json")), json.dumps(prov, indent=2, sort_keys=True) + "\n")


def cmd_segment(args, cfg):
    raw = io.load_recording(args.recording)
    model = io.load_model(args.segmenter)
    config = segmentation_config(cfg)
    processed = preprocess(raw, cutoff(cfg))
    result = select_cut_points(processed, model, config, args.seed)
    doc = {**result.to_dict(), "warnings": result.warnings}
    write_text(args.out, json.dumps(doc, indent=2) + "\n")
    if args.plot:
        write_text(args.plot, io.render_svg(processed[config.channel], result.cut_points, title=f"{raw.subject_id} {raw.exercise}"))


def cmd_features(args, cfg):
    segmenter = io.load_model(args.segmenter)
    config = segmentation_config(cfg)
    vectors = []
    for path in recording_paths(args.recordings):
        raw = io.load_recording(path)
        processed = preprocess(raw, cutoff(cfg))
        result = select_cut_points(processed, segmenter, config, args.seed)
        for fv, matched in repetition_vectors(processed, result):
            if matched or not args.matched_only:
                vectors.append(fv)
    io.save_features(vectors, REPETITION_SCHEMA, args.out)
    print(f"wrote {len(vectors)} feature vectors to {args.out}")


def load_dataset(path: str) -> Dataset:
    vectors = [v for v in io.load_features(path, REPETITION_SCHEMA) if v.label is not None]
    if not vectors:
        raise io.DataError(f"{path}: no labeled rows")
    return Dataset.from_vectors(vectors, REPETITION_SCHEMA)


def cmd_train(args, cfg):
    hyper = cfg.get("hyperparameters", {})
    if args.algo == "segmenter":
        config = segmentation_config(cfg)
        if args.inputs:
            recs = [io.load_recording(p) for p in recording_paths(args.inputs)]
            missing = [r.subject_id for r in recs if r.ground_truth_bounds is None]
            if missing:
                raise io.DataError("segmenter training needs ground_truth_bounds in every sidecar")
            X, y = chunk_templates(((r, r.ground_truth_bounds) for r in recs), config, args.seed, cutoff(cfg))
            model = train_chunk_classifier(X, y, hyper or None)
        else:
            model = train_segmenter(args.sessions, args.seed, config)
    else:
        if len(args.inputs) != 1:
            raise UsageError("train expects exactly one feature table")
        ds = load_dataset(args.inputs[0])
        try:
            model = train(ds, TrainConfig(args.algo, args.seed, hyper))
        except ValueError as exc:
            raise io.DataError(str(exc)) from None
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    io.save_model(model, args.out)


def cmd_evaluate(args, cfg):
    ds = load_dataset(args.features)
    plan = make_subject_folds(ds, args.folds, args.seed)
    report = cross_validate(ds, TrainConfig(args.algo, args.seed, cfg.get("hyperparameters", {})), plan)
    doc = report.to_dict()
    doc["group_by"] = args.group_by
    doc["fold_subjects"] = {str(f): plan.fold_subjects(f) for f in range(plan.k)}
    write_text(args.out, json.dumps(doc, indent=2) + "\n")


def cmd_pipeline(args, cfg):
    doc = io.run_pipeline(
        args.recording,
        args.segmenter,
        args.classifier,
        segmentation_config(cfg),
        seed=args.seed,
        cutoff_hz=cutoff(cfg),
        plot_path=args.plot,
    )
    write_text(args.out, json.dumps(doc, indent=2) + "\n")
    for w in doc["summary"]["warnings"]:
        log.warning(w)


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = Parser(prog="rehabkit", description="Segment and classify exercise repetitions from shin-worn IMU recordings.", formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text, formatter_class=fmt)
        p.add_argument("--seed", type=int, default=0, help="random seed")
        p.add_argument("--config", default=None, help="JSON config with preprocess/segmentation/hyperparameters sections")
        return p

    p = command("synth", "generate synthetic recordings with ground truth")
    p.add_argument("--exercise", choices=EXERCISES + ("all",), default="HS", help="exercise template")
    p.add_argument("--reps", type=int, default=10, help="repetitions per session")
    p.add_argument("--sessions", type=int, default=1, help="sessions per subject")
    p.add_argument("--subjects", type=int, default=1, help="subjects (more than one draws per-subject variation)")
    p.add_argument("--per-subject", action="store_true", help="per-subject variation even for a single subject")
    p.add_argument("--labels", choices=("mixed", "correct"), default="mixed", help="label mix of the repetitions")
    p.add_argument("--fatigue", action="store_true", help="long pauses and isometric holds")
    p.add_argument("--noise", type=float, default=0.01, help="noise sigma as a fraction of full scale")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = command("preprocess", "filter and normalize one recording into nine channels")
    p.add_argument("recording", help="recording CSV with its JSON sidecar")
    p.add_argument("--out", required=True, help="output CSV (provenance goes next to it as .json)")
    p.set_defaults(func=cmd_preprocess)

    p = command("segment", "detect repetition boundaries")
    p.add_argument("recording", help="recording CSV with its JSON sidecar")
    p.add_argument("--segmenter", required=True, help="trained segmenter model file")
    p.add_argument("--plot", default=None, help="optional SVG with cut-point markers")
    p.add_argument("--out", required=True, help="output JSON")
    p.set_defaults(func=cmd_segment)

    p = command("features", "segment recordings and export per-repetition feature vectors")
    p.add_argument("recordings", nargs="+", help="recording CSVs or directories")
    p.add_argument("--segmenter", required=True, help="trained segmenter model file")
    p.add_argument("--matched-only", action="store_true", help="keep only repetitions that match ground truth")
    p.add_argument("--out", required=True, help="output feature CSV")
    p.set_defaults(func=cmd_features)

    p = command("train", "train a repetition classifier or the chunk segmenter")
    p.add_argument("inputs", nargs="*", help="feature CSV, or recordings with ground truth for --algo segmenter")
    p.add_argument("--algo", choices=TRAIN_ALGOS, default="rf", help="classifier family, or segmenter for the chunk classifier")
    p.add_argument("--sessions", type=int, default=200, help="synthetic template sessions for the segmenter when no recordings are given")
    p.add_argument("--out", required=True, help="output model file")
    p.set_defaults(func=cmd_train)

    p = command("evaluate", "subject-wise k-fold cross-validation")
    p.add_argument("features", help="feature CSV")
    p.add_argument("--algo", choices=EVAL_ALGOS, default="rf", help="classifier family")
    p.add_argument("--folds", type=int, default=5, help="number of subject folds")
    p.add_argument("--group-by", choices=("subject",), default="subject", help="grouping that folds never split")
    p.add_argument("--out", required=True, help="output JSON report")
    p.set_defaults(func=cmd_evaluate)

    p = command("pipeline", "segment, extract features and classify one recording")
    p.add_argument("recording", help="recording CSV with its JSON sidecar")
    p.add_argument("--segmenter", required=True, help="trained segmenter model file")
    p.add_argument("--classifier", required=True, help="trained repetition classifier model file")
    p.add_argument("--plot", default=None, help="optional SVG with cut-point markers")
    p.add_argument("--out", required=True, help="output verdict JSON")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        args.func(args, cfg)
    except io.StageError as exc:
        print(f"rehabkit: {exc}", file=sys.stderr)
        return exc.exit_code
    except io.RehabkitError as exc:
        print(f"rehabkit {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"rehabkit {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
