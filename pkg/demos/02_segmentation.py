"""
Finding repetitions without knowing how many there are
======================================================

Zero-velocity samples mark the pauses between repetitions.  They are grouped
with one-dimensional k-means (k from the elbow of the within-cluster sum of
squares), chunks between neighbouring centroids are scored by a streaming
decision tree, and the best non-overlapping chunks become repetitions.
"""
from pathlib import Path

import numpy as np

from rehabkit.io import render_svg
from rehabkit.pipeline import train_segmenter
from rehabkit.segmentation import SegmentationConfig, detect_zero_velocity, segment, segmentation_accuracy
from rehabkit.signal import preprocess
from rehabkit.synthgen import TEMPLATES, SessionSpec, mixed_labels, synth_session

# the chunk classifier learns what a single repetition looks like from labeled synthetic sessions
segmenter = train_segmenter(sessions=100, seed=0)
print(segmenter)

raw, truth = synth_session(SessionSpec.clean("SKE", noise_sigma=0.01, seed=21))
processed = preprocess(raw)
config = SegmentationConfig()
zv = detect_zero_velocity(processed[config.channel], config)
print(f"{zv.size} zero-velocity samples out of {len(processed)}")

result = segment(raw, segmenter)
print(f"{len(result.cut_points)} cut points, {len(result.repetitions)} repetitions, {result.rejected_chunks} chunks rejected")
for (s, e), (ts, te) in zip(result.repetitions[:3], truth.boundaries[:3]):
    print(f"  detected {s:5d}-{e:5d}   true {ts:5d}-{te:5d}")

out = Path("segmentation.svg")
out.write_text(render_svg(processed[config.channel], result.cut_points, title="SKE, MAG channel"))
print("wrote", out)

# counting accuracy over clean and fatigued sessions of every exercise
rng = np.random.default_rng(0)
for name, make in (
    ("clean", lambda ex, i: SessionSpec.clean(ex, noise_sigma=0.01, seed=i)),
    ("fatigue", lambda ex, i: SessionSpec.fatigue(ex, mixed_labels(10, rng), noise_sigma=0.01, seed=i)),
):
    cases = [(10, len(segment(synth_session(make(ex, i))[0], segmenter).repetitions)) for ex in TEMPLATES for i in range(10)]
    print(f"{name:>8}: A_S = {segmentation_accuracy(cases):.3f} over {len(cases)} sessions")
