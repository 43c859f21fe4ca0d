"""Train the recurrent fusion model and turn distances into chapters.

The model maps each video's shot features to fused per-shot features; cosine
distances between consecutive fused features are thresholded into chapter
boundaries. The threshold comes from a validation sweep maximizing F1 at
IoU 0.5. Takes about half a minute on a laptop CPU.
"""

import tempfile
from pathlib import Path

import numpy as np

from newsreel import SyntheticSpec, generate_synthetic, load_video_record, split_dataset
from newsreel.chaptering import distance_matrix, segment_by_threshold, sweep_threshold
from newsreel.features import assemble_sequence, fit_normalizer
from newsreel.models import ModelSpec, forward
from newsreel.timeline import chapters_from_labels
from newsreel.training import TrainConfig, train

out = Path(tempfile.mkdtemp()) / "corpus"
generate_synthetic(SyntheticSpec(seed=0), out)
records = [load_video_record(m) for m in sorted(out.glob("video_*/manifest.json"))]
splits = split_dataset(records, (2 / 3, 1 / 6, 1 / 6), seed=0)

norm = fit_normalizer([assemble_sequence(r) for r in splits["train"]])
train_seqs = [assemble_sequence(r, norm) for r in splits["train"]]
val_seqs = [assemble_sequence(r, norm) for r in splits["val"]]
test_seqs = [assemble_sequence(r, norm) for r in splits["test"]]

spec = ModelSpec("bilstm", train_seqs[0].features.shape[1], hidden_dim=32, layers=2,
                 projection_dim=32, dropout_rate=0.0, seed=0)
model, history = train(spec, train_seqs, val_seqs, TrainConfig(epochs=10, batch_size=1, base_lr=2e-2, seed=0))
print("epoch  train_loss  val_loss  val_F1@IoU0.5")
for entry in history:
    print(f"{entry['epoch']:5d}  {entry['train_loss']:10.3f}  {entry['val_loss']:8.3f}  {entry['val_f1_iou50']:7.3f}")

tau = sweep_threshold(model, val_seqs)
print(f"\nswept threshold tau = {tau}")

seq = test_seqs[0]
fused = forward(model, seq, mode="eval")
pred = segment_by_threshold(distance_matrix(fused), tau, seq.shots)
gt = chapters_from_labels(seq.shots, seq.labels)
print(f"\n{seq.video_id}: predicted {len(pred)} chapters, annotation has {len(gt)}")
print("pred starts:", np.round(pred.starts(), 1).tolist())
print("true starts:", np.round(gt.starts(), 1).tolist())
