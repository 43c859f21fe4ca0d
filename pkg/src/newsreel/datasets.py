"""On-disk corpus handling: manifests, annotations, transcripts, diarization, splits.

Every loader either returns a fully validated value or raises ManifestError /
StoreFormatError with file context; partially valid records never escape.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .stores import read_store_header
from .timeline import Chapter, ChapterList, Shot, TimeInterval, validate_partition, validate_shots

MAX_SPEAKERS = 20
CHAPTERS_CSV_HEADER = ["start_seconds", "end_seconds", "title"]
MANIFEST_KEYS = {"id", "duration_s", "fps", "shots", "files"}
OPTIONAL_MANIFEST_KEYS = {"face_flags"}
FILE_KEYS = {"visual", "text", "text_segments", "diarization", "chapters", "audio", "mfcc"}


class ManifestError(Exception):
    """Missing file, row-count mismatch, or malformed field, with file context."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = str(path)


@dataclass(frozen=True)
class DiarSegment:
    speaker: int
    interval: TimeInterval

    def __post_init__(self):
        if not 0 <= self.speaker < MAX_SPEAKERS:
            raise ValueError(f"speaker id {self.speaker} outside 0..{MAX_SPEAKERS - 1}")


@dataclass(frozen=True)
class TranscriptWord:
    word: str
    interval: TimeInterval
    segment: int


@dataclass(frozen=True)
class SegmentInterval:
    segment: int
    interval: TimeInterval


@dataclass
class VideoRecord:
    """One video's validated manifest: timeline plus paths to its feature files."""

    id: str
    duration: float
    fps: float
    shots: list[Shot]
    chapters: ChapterList | None
    visual_path: Path
    text_path: Path
    text_segments: list[SegmentInterval]
    diarization: list[DiarSegment]
    audio_path: Path | None
    mfcc_path: Path | None
    face_flags: list[bool] | None = None

    @property
    def n_shots(self) -> int:
        return len(self.shots)


def read_chapters_csv(path, video_duration: float | None = None) -> ChapterList:
    """Load `start_seconds,end_seconds,title` rows into a validated partition."""
    path = Path(path)
    chapters = []
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ManifestError(path, f"cannot open chapters CSV: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CHAPTERS_CSV_HEADER:
            raise ManifestError(path, f"expected header {','.join(CHAPTERS_CSV_HEADER)}, got {header}")
        for line, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise ManifestError(path, f"line {line}: expected 3 fields, got {len(row)}")
            try:
                interval = TimeInterval(float(row[0]), float(row[1]))
            except ValueError as exc:
                raise ManifestError(path, f"line {line}: {exc}") from exc
            chapters.append(Chapter(interval, row[2] or None))
    if not chapters:
        raise ManifestError(path, "no chapter rows")
    if video_duration is None:
        video_duration = chapters[-1].interval.end
    chapter_list = ChapterList(tuple(chapters), video_duration)
    violations = validate_partition(chapter_list)
    if violations:
        raise ManifestError(path, "; ".join(v.detail for v in violations))
    return chapter_list


def write_chapters_csv(path, chapters: ChapterList) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CHAPTERS_CSV_HEADER)
        for i, chapter in enumerate(chapters.chapters):
            writer.writerow([repr(chapter.interval.start), repr(chapter.interval.end), chapter.title or f"chapter_{i}"])


def _load_json(path):
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ManifestError(path, f"cannot open: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(path, f"invalid JSON: {exc}") from exc


def read_diarization(path) -> list[DiarSegment]:
    """JSON list [{speaker, start_s, end_s}]; segments may overlap."""
    segments = []
    for i, entry in enumerate(_load_json(path)):
        try:
            segments.append(DiarSegment(int(entry["speaker"]), TimeInterval(float(entry["start_s"]), float(entry["end_s"]))))
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(path, f"entry {i}: {exc}") from exc
    return segments


def read_transcript(path) -> list[TranscriptWord]:
    """JSON list [{word, start_s, end_s, segment}], words time-sorted per segment."""
    words = []
    for i, entry in enumerate(_load_json(path)):
        try:
            words.append(
                TranscriptWord(str(entry["word"]), TimeInterval(float(entry["start_s"]), float(entry["end_s"])), int(entry["segment"]))
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(path, f"entry {i}: {exc}") from exc
    last_start: dict[int, float] = {}
    for i, word in enumerate(words):
        if word.interval.start < last_start.get(word.segment, 0.0):
            raise ManifestError(path, f"entry {i}: words out of time order within segment {word.segment}")
        last_start[word.segment] = word.interval.start
    return words


def read_segment_intervals(path) -> list[SegmentInterval]:
    """JSON list [{segment, start_s, end_s}], one span per transcript segment."""
    spans = []
    for i, entry in enumerate(_load_json(path)):
        try:
            spans.append(SegmentInterval(int(entry["segment"]), TimeInterval(float(entry["start_s"]), float(entry["end_s"]))))
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(path, f"entry {i}: {exc}") from exc
    return spans


def load_video_record(manifest_path) -> VideoRecord:
    """Parse one manifest and eagerly check every cross-file invariant.

    Store payload sizes and row counts are checked from headers without
    loading the matrices; mismatches name both counts.
    """
    manifest_path = Path(manifest_path)
    manifest = _load_json(manifest_path)
    if not isinstance(manifest, dict):
        raise ManifestError(manifest_path, "manifest must be a JSON object")
    keys = set(manifest)
    unknown = keys - MANIFEST_KEYS - OPTIONAL_MANIFEST_KEYS
    if unknown:
        raise ManifestError(manifest_path, f"unknown manifest keys {sorted(unknown)}")
    missing = MANIFEST_KEYS - keys
    if missing:
        raise ManifestError(manifest_path, f"missing manifest keys {sorted(missing)}")

    try:
        video_id = str(manifest["id"])
        duration = float(manifest["duration_s"])
        fps = float(manifest["fps"])
        shots = [
            Shot(i, TimeInterval(float(s["start_s"]), float(s["end_s"]))) for i, s in enumerate(manifest["shots"])
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(manifest_path, f"malformed field: {exc}") from exc
    if not shots:
        raise ManifestError(manifest_path, "manifest declares no shots")
    try:
        validate_shots(shots)
    except ValueError as exc:
        raise ManifestError(manifest_path, str(exc)) from exc
    if abs(shots[-1].interval.end - duration) > 0.5:
        raise ManifestError(
            manifest_path, f"duration_s {duration} inconsistent with last shot end {shots[-1].interval.end}"
        )

    files = manifest["files"]
    if not isinstance(files, dict):
        raise ManifestError(manifest_path, "files must be a JSON object")
    unknown = set(files) - FILE_KEYS
    if unknown:
        raise ManifestError(manifest_path, f"unknown file keys {sorted(unknown)}")
    for key in ("visual", "text", "text_segments", "diarization"):
        if key not in files:
            raise ManifestError(manifest_path, f"files entry {key!r} is required")
    if ("audio" in files) == ("mfcc" in files):
        raise ManifestError(manifest_path, "exactly one of files.audio / files.mfcc is required")

    base = manifest_path.parent

    def resolve(key):
        path = base / files[key]
        if not path.exists():
            raise ManifestError(manifest_path, f"referenced file missing: {files[key]}")
        return path

    visual_path = resolve("visual")
    text_path = resolve("text")
    segments = read_segment_intervals(resolve("text_segments"))
    try:
        diarization = read_diarization(resolve("diarization"))
    except ValueError as exc:
        raise ManifestError(manifest_path, str(exc)) from exc

    visual_count, _ = read_store_header(visual_path)
    if visual_count != len(shots):
        raise ManifestError(
            manifest_path, f"visual store holds {visual_count} rows for {len(shots)} shots"
        )
    text_count, _ = read_store_header(text_path)
    if text_count != len(segments):
        raise ManifestError(
            manifest_path, f"text store holds {text_count} rows for {len(segments)} transcript segments"
        )

    audio_path = mfcc_path = None
    if "audio" in files:
        audio_path = resolve("audio")
    else:
        mfcc_path = resolve("mfcc")
        mfcc_count, _ = read_store_header(mfcc_path)
        if mfcc_count != len(shots):
            raise ManifestError(manifest_path, f"mfcc store holds {mfcc_count} rows for {len(shots)} shots")

    chapters = None
    if "chapters" in files:
        chapters = read_chapters_csv(resolve("chapters"), video_duration=duration)

    face_flags = None
    if "face_flags" in manifest:
        face_flags = [bool(x) for x in manifest["face_flags"]]
        if len(face_flags) != len(shots):
            raise ManifestError(manifest_path, f"{len(face_flags)} face flags for {len(shots)} shots")

    return VideoRecord(
        id=video_id,
        duration=duration,
        fps=fps,
        shots=shots,
        chapters=chapters,
        visual_path=visual_path,
        text_path=text_path,
        text_segments=segments,
        diarization=diarization,
        audio_path=audio_path,
        mfcc_path=mfcc_path,
        face_flags=face_flags,
    )


def largest_remainder_sizes(n: int, ratios) -> list[int]:
    """Integer split sizes summing to n; remainders granted largest-first, ties to the lower index."""
    ratios = [float(r) for r in ratios]
    if any(r <= 0 for r in ratios) or not math.isclose(sum(ratios), 1.0, abs_tol=1e-9):
        raise ValueError(f"ratios must be positive and sum to 1, got {ratios}")
    raw = [n * r for r in ratios]
    sizes = [int(math.floor(x)) for x in raw]
    remainders = [x - s for x, s in zip(raw, sizes)]
    for _ in range(n - sum(sizes)):
        best = max(range(len(ratios)), key=lambda i: (remainders[i], -i))
        sizes[best] += 1
        remainders[best] = -1.0
    return sizes


def split_dataset(records: list, ratios=(0.72, 0.18, 0.10), seed: int = 0) -> dict[str, list]:
    """Shuffle whole videos with a seeded permutation and cut train/val/test."""
    if len(ratios) != 3:
        raise ValueError(f"expected 3 ratios (train/val/test), got {len(ratios)}")
    if len(records) < len(ratios):
        raise ValueError(f"cannot split {len(records)} records into {len(ratios)} parts")
    sizes = largest_remainder_sizes(len(records), ratios)
    order = np.random.default_rng(seed).permutation(len(records))
    shuffled = [records[i] for i in order]
    train_end = sizes[0]
    val_end = sizes[0] + sizes[1]
    return {"train": shuffled[:train_end], "val": shuffled[train_end:val_end], "test": shuffled[val_end:]}
