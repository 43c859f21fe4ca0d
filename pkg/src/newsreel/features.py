"""Per-shot multimodal feature assembly: align, normalize, concatenate.

Each shot becomes one fixed-order vector [visual | text | speaker | audio].
The speaker block is a 21-slot one-hot (20 speakers + silence) and is never
rescaled; z-normalization applies to the other blocks, fitted on the training
split only.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import audio as audio_mod
from .datasets import MAX_SPEAKERS, DiarSegment, SegmentInterval, VideoRecord
from .stores import read_store, write_store
from .timeline import ChapterLabels, Shot, TimeInterval, assign_chapter_labels

SILENCE = -1
SPEAKER_SLOTS = MAX_SPEAKERS + 1  # one silence slot after the 20 speaker slots
STD_FLOOR = 1e-6


def speaker_for_shot(segments: list[DiarSegment], shot: TimeInterval) -> int:
    """Speaker with the maximum total speech time inside the shot.

    Returns SILENCE when nothing overlaps; ties break to the lower speaker id.
    """
    overlap = np.zeros(MAX_SPEAKERS)
    for segment in segments:
        overlap[segment.speaker] += segment.interval.overlap(shot)
    if overlap.max() <= 0.0:
        return SILENCE
    return int(overlap.argmax())


def encode_speaker(speaker: int) -> np.ndarray:
    """One-hot over 21 slots; SILENCE takes the final slot."""
    onehot = np.zeros(SPEAKER_SLOTS)
    if speaker == SILENCE:
        onehot[MAX_SPEAKERS] = 1.0
    elif 0 <= speaker < MAX_SPEAKERS:
        onehot[speaker] = 1.0
    else:
        raise ValueError(f"speaker id {speaker} violates the {MAX_SPEAKERS}-speaker diarization cap")
    return onehot


def text_embedding_for_shot(
    embeddings: np.ndarray, segments: list[SegmentInterval], shot: TimeInterval
) -> np.ndarray:
    """Embedding of the transcript segment with maximum overlap; zeros when silent.

    Ties break to the earlier segment. The zero vector marks missing text: it
    is the identity under the fusion model's input bias and cannot collide
    with a real embedding after normalization.
    """
    best, best_overlap = -1, 0.0
    for i, segment in enumerate(segments):
        ov = segment.interval.overlap(shot)
        if ov > best_overlap:
            best, best_overlap = i, ov
    if best < 0:
        return np.zeros(embeddings.shape[1])
    return np.asarray(embeddings[best], dtype=np.float64)


def visual_embedding_for_shot(embeddings: np.ndarray, shot_index: int, expected_dim: int | None = None) -> np.ndarray:
    """Row lookup; the store already holds one central-frame embedding per shot."""
    if expected_dim is not None and embeddings.shape[1] != expected_dim:
        raise ValueError(f"visual store dim {embeddings.shape[1]} != declared {expected_dim}")
    return np.asarray(embeddings[shot_index], dtype=np.float64)


@dataclass
class ShotFeatureVector:
    visual: np.ndarray
    text: np.ndarray
    speaker: np.ndarray
    audio: np.ndarray

    def __post_init__(self):
        if int(round(self.speaker.sum())) != 1 or not np.isin(self.speaker, (0.0, 1.0)).all():
            raise ValueError("speaker block must be one-hot")
        for name in ("visual", "text", "speaker", "audio"):
            if not np.isfinite(getattr(self, name)).all():
                raise ValueError(f"non-finite values in {name} block")

    def concatenated(self) -> np.ndarray:
        return np.concatenate([self.visual, self.text, self.speaker, self.audio])


@dataclass
class FeatureSequence:
    """One video's shots as a T x D matrix, with block layout and optional labels."""

    video_id: str
    features: np.ndarray
    shots: list[Shot]
    blocks: dict[str, slice]
    labels: ChapterLabels | None = None

    def __post_init__(self):
        if self.features.shape[0] != len(self.shots):
            raise ValueError(f"{self.features.shape[0]} feature rows for {len(self.shots)} shots")


@dataclass
class NormalizerStats:
    """Per-dimension mean/std over a training set; speaker block pinned to (0, 1)."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        if self.std.min() < STD_FLOOR:
            raise ValueError(f"std below floor {STD_FLOOR}")

    def apply(self, features: np.ndarray) -> np.ndarray:
        return (features - self.mean) / self.std


def fit_normalizer(sequences: list[FeatureSequence]) -> NormalizerStats:
    """Population mean/std over all training shots, std floored at 1e-6.

    The speaker one-hot block gets mean 0 / std 1 so applying the stats leaves
    it untouched without a second code path.
    """
    if not sequences:
        raise ValueError("cannot fit a normalizer on an empty training set")
    stacked = np.concatenate([s.features for s in sequences], axis=0)
    mean = stacked.mean(axis=0)
    std = np.maximum(stacked.std(axis=0), STD_FLOOR)
    speaker = sequences[0].blocks["speaker"]
    mean[speaker] = 0.0
    std[speaker] = 1.0
    return NormalizerStats(mean, std)


def save_normalizer(path, stats: NormalizerStats) -> None:
    write_store(path, np.stack([stats.mean, stats.std]))


def load_normalizer(path) -> NormalizerStats:
    rows = read_store(path).astype(np.float64)
    if rows.shape[0] != 2:
        raise ValueError(f"{path}: normalizer store must have exactly 2 rows (mean, std), got {rows.shape[0]}")
    return NormalizerStats(rows[0], np.maximum(rows[1], STD_FLOOR))


def assemble_sequence(
    record: VideoRecord,
    norm: NormalizerStats | None = None,
    expected_visual_dim: int | None = None,
    mfcc_params: audio_mod.MfccParams | None = None,
) -> FeatureSequence:
    """Build the per-shot feature matrix for one video.

    Audio comes from the precomputed per-shot store when the manifest declares
    one, otherwise from MFCC over the referenced waveform pooled per shot
    (a shot with no audio frame is an error; text falls back to zeros instead).
    """
    visual = read_store(record.visual_path).astype(np.float64)
    if expected_visual_dim is not None and visual.shape[1] != expected_visual_dim:
        raise ValueError(f"{record.visual_path}: visual dim {visual.shape[1]} != declared {expected_visual_dim}")
    text = read_store(record.text_path).astype(np.float64)

    if record.mfcc_path is not None:
        audio_rows = read_store(record.mfcc_path).astype(np.float64)
    else:
        params = mfcc_params or audio_mod.MfccParams()
        if str(record.audio_path).endswith(".wav"):
            samples, rate = audio_mod.read_wav(record.audio_path)
            params = replace(params, sample_rate=rate)  # the file's rate wins
        else:
            samples = audio_mod.read_raw_float32(record.audio_path)
        matrix = audio_mod.compute_mfcc(samples, params)
        audio_rows = np.stack(
            [audio_mod.pool_mfcc(matrix, shot.interval.start, shot.interval.end) for shot in record.shots]
        )

    rows = []
    for shot in record.shots:
        vector = ShotFeatureVector(
            visual=visual_embedding_for_shot(visual, shot.index),
            text=text_embedding_for_shot(text, record.text_segments, shot.interval),
            speaker=encode_speaker(speaker_for_shot(record.diarization, shot.interval)),
            audio=np.asarray(audio_rows[shot.index], dtype=np.float64),
        )
        rows.append(vector.concatenated())
    features = np.stack(rows)

    dims = [visual.shape[1], text.shape[1], SPEAKER_SLOTS, audio_rows.shape[1]]
    edges = np.concatenate([[0], np.cumsum(dims)])
    blocks = {
        name: slice(int(edges[i]), int(edges[i + 1]))
        for i, name in enumerate(("visual", "text", "speaker", "audio"))
    }

    if norm is not None:
        if norm.mean.shape[0] != features.shape[1]:
            raise ValueError(f"normalizer dim {norm.mean.shape[0]} != feature dim {features.shape[1]}")
        features = norm.apply(features)

    labels = assign_chapter_labels(record.shots, record.chapters) if record.chapters is not None else None
    return FeatureSequence(record.id, features, record.shots, blocks, labels)
