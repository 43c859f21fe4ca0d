"""Compare the two non-neural baselines under the full metric suite.

The zero-shot baseline thresholds distances over the raw normalized features;
the anchor baseline clusters visual embeddings, takes the most populous
cluster as the recurring presenter, and starts a chapter at each of their
appearances. Both are scored at start-time thresholds {1, 3, 5} s and IoU
thresholds {0.5, 0.7, 0.9}, micro-averaged over the test videos.
"""

import tempfile
from pathlib import Path

import numpy as np

from newsreel import SyntheticSpec, generate_synthetic, load_video_record, split_dataset
from newsreel.chaptering import anchor_segment, sweep_threshold, zero_shot_segment
from newsreel.features import assemble_sequence, fit_normalizer
from newsreel.metrics import aggregate, evaluate, format_table
from newsreel.stores import read_store

out = Path(tempfile.mkdtemp()) / "corpus"
generate_synthetic(SyntheticSpec(seed=0), out)
records = [load_video_record(m) for m in sorted(out.glob("video_*/manifest.json"))]
splits = split_dataset(records, (2 / 3, 1 / 6, 1 / 6), seed=0)

norm = fit_normalizer([assemble_sequence(r) for r in splits["train"]])
val_seqs = [assemble_sequence(r, norm) for r in splits["val"]]
tau = sweep_threshold(None, val_seqs)
print(f"zero-shot tau from the validation sweep: {tau}\n")

zero_shot, anchor = [], []
for record in splits["test"]:
    gt = record.chapters
    zero_shot.append(evaluate(zero_shot_segment(record, norm, tau), gt))
    embeddings = read_store(record.visual_path).astype(np.float64)
    # face flags narrow the clustering to shots with people; one cluster per
    # expected story plus one for the anchor
    pred = anchor_segment(
        record.shots, embeddings, k=9, face_flags=record.face_flags, seed=0,
        video_duration=record.duration,
    )
    anchor.append(evaluate(pred, gt))

print(format_table({
    "zero-shot": aggregate(zero_shot),
    "anchor": aggregate(anchor),
}))
print("\nthe anchor's recurring studio shot makes it the largest visual cluster,")
print("so its appearances mark chapter starts directly")
