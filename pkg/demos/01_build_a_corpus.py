"""Generate a small synthetic newscast corpus and peek inside it.

Every video directory holds the full ingest surface: a manifest, embedding
stores for the visual/text/audio modalities, diarization and transcript
segment JSON, and the ground-truth chapters CSV. The corpus is byte-identical
for a fixed seed.
"""

import tempfile
from pathlib import Path

from newsreel import SyntheticSpec, generate_synthetic, load_video_record

out = Path(tempfile.mkdtemp()) / "corpus"
spec = SyntheticSpec(n_videos=4, shots_per_video=(18, 24), chapters_per_video=(3, 4), seed=7)
manifests = generate_synthetic(spec, out)

print(f"wrote {len(manifests)} videos under {out}\n")
for path in sorted((out / "video_000").iterdir()):
    print(f"  video_000/{path.name}  ({path.stat().st_size} bytes)")

record = load_video_record(manifests[0])
print(f"\n{record.id}: {record.n_shots} shots, {len(record.chapters)} chapters, "
      f"{record.duration:.1f} s")
for chapter in record.chapters.chapters:
    print(f"  {chapter.title}: [{chapter.interval.start:7.2f}, {chapter.interval.end:7.2f}]")
print("\nfirst three diarization turns:")
for segment in record.diarization[:3]:
    print(f"  speaker {segment.speaker}: [{segment.interval.start:.2f}, {segment.interval.end:.2f}]")
