"""Timeline primitives: intervals, shots, chapters, and the shot-to-chapter labeling.

Chapters partition a video: contiguous, non-overlapping, covering [0, duration]
exactly. Shots are the atomic units; every shot gets exactly one chapter label,
and labels along a video are non-decreasing with unit steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True, order=True)
class TimeInterval:
    """Half-open-ish time span in seconds with strictly positive duration."""

    start: float
    end: float

    def __post_init__(self):
        # NaN fails both comparisons, so it is rejected here too.
        if not (self.start >= 0.0 and self.end > self.start):
            raise ValueError(f"invalid interval [{self.start}, {self.end}]")

    @property
    def duration(self) -> float:
        return self.end - self.start

    def overlap(self, other: "TimeInterval") -> float:
        """Length of the intersection with `other`, 0.0 when disjoint."""
        return max(0.0, min(self.end, other.end) - max(self.start, other.start))


@dataclass(frozen=True)
class Shot:
    """A run of frames between two visual transitions."""

    index: int
    interval: TimeInterval


@dataclass(frozen=True)
class Chapter:
    interval: TimeInterval
    title: str | None = None


@dataclass(frozen=True)
class Violation:
    """One partition defect: kind is 'interval', 'order', 'overlap', 'gap' or 'coverage'."""

    kind: str
    index: int
    detail: str


@dataclass(frozen=True)
class ChapterList:
    """Ordered chapters expected to partition [0, video_duration]."""

    chapters: tuple[Chapter, ...]
    video_duration: float

    def __post_init__(self):
        object.__setattr__(self, "chapters", tuple(self.chapters))

    def __len__(self) -> int:
        return len(self.chapters)

    def starts(self) -> list[float]:
        return [c.interval.start for c in self.chapters]

    def ensure_valid(self) -> "ChapterList":
        violations = validate_partition(self)
        if violations:
            raise ValueError("invalid chapter partition: " + "; ".join(v.detail for v in violations))
        return self


@dataclass(frozen=True)
class ChapterLabels:
    """Chapter index per shot (the labeling function over a video's shots)."""

    labels: tuple[int, ...]

    def __post_init__(self):
        labels = tuple(int(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise ValueError("empty label vector")
        if labels[0] != 0:
            raise ValueError(f"first label must be 0, got {labels[0]}")
        for i in range(1, len(labels)):
            step = labels[i] - labels[i - 1]
            if step not in (0, 1):
                raise ValueError(f"label step {step} at shot {i}: labels must be non-decreasing with unit steps")

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    @property
    def n_chapters(self) -> int:
        return self.labels[-1] + 1


def interval_iou(a: TimeInterval, b: TimeInterval) -> float:
    """Intersection-over-union of two intervals; 0 when disjoint."""
    inter = a.overlap(b)
    union = a.duration + b.duration - inter
    return inter / union


def validate_partition(chapter_list: ChapterList) -> list[Violation]:
    """Check that chapters partition [0, video_duration]; empty list means ok.

    Comparisons are exact: partitions built by this package share boundary
    float values, and the chapters CSV round-trips floats via repr.
    """
    violations: list[Violation] = []
    chapters = chapter_list.chapters
    if not chapters:
        return [Violation("coverage", 0, "no chapters")]
    if chapters[0].interval.start != 0.0:
        violations.append(Violation("coverage", 0, f"first chapter starts at {chapters[0].interval.start}, not 0"))
    for i in range(1, len(chapters)):
        prev_end = chapters[i - 1].interval.end
        start = chapters[i].interval.start
        if start > prev_end:
            violations.append(Violation("gap", i, f"gap ({prev_end}, {start}) before chapter {i}"))
        elif start < prev_end:
            violations.append(Violation("overlap", i, f"chapter {i} starts at {start} before previous end {prev_end}"))
    last_end = chapters[-1].interval.end
    if last_end != chapter_list.video_duration:
        violations.append(
            Violation(
                "coverage",
                len(chapters) - 1,
                f"last chapter ends at {last_end}, video duration is {chapter_list.video_duration}",
            )
        )
    return violations


def assign_chapter_labels(shots: list[Shot], gt: ChapterList) -> ChapterLabels:
    """Label each shot with the chapter of maximum temporal overlap.

    Ties break to the earlier chapter. A shot overlapping no chapter is an
    annotation/shot mismatch and raises; so does a label sequence that skips a
    chapter (a chapter strictly inside a single shot), since downstream code
    requires unit label steps.
    """
    labels = []
    for shot in shots:
        best, best_overlap = -1, 0.0
        for ci, chapter in enumerate(gt.chapters):
            ov = shot.interval.overlap(chapter.interval)
            if ov > best_overlap:
                best, best_overlap = ci, ov
        if best < 0:
            raise ValueError(f"shot {shot.index} [{shot.interval.start}, {shot.interval.end}] overlaps no chapter")
        labels.append(best)
    try:
        return ChapterLabels(tuple(labels))
    except ValueError as exc:
        raise ValueError(f"chapter annotation finer than shot granularity: {exc}") from exc


def chapters_from_boundaries(boundaries: list[float], video_duration: float) -> ChapterList:
    """Assemble a ChapterList from interior boundary times.

    The first start snaps to 0 and the last end to video_duration so the
    result always satisfies the partition invariant. Boundaries at or outside
    (0, video_duration) are dropped.
    """
    interior = sorted({b for b in boundaries if 0.0 < b < video_duration})
    edges = [0.0] + interior + [video_duration]
    chapters = tuple(
        Chapter(TimeInterval(edges[i], edges[i + 1]), title=f"chapter_{i}") for i in range(len(edges) - 1)
    )
    return ChapterList(chapters, video_duration)


def chapters_from_labels(shots: list[Shot], labels: ChapterLabels, video_duration: float | None = None) -> ChapterList:
    """Inverse of assign_chapter_labels: group consecutive equal labels into chapters."""
    if len(labels) != len(shots):
        raise ValueError(f"{len(labels)} labels for {len(shots)} shots")
    if video_duration is None:
        video_duration = shots[-1].interval.end
    boundaries = [
        shots[i].interval.start for i in range(1, len(shots)) if labels.labels[i] != labels.labels[i - 1]
    ]
    return chapters_from_boundaries(boundaries, video_duration)


def validate_shots(shots: list[Shot], tolerance: float = 1e-6) -> None:
    """Require shots sorted by start and contiguous within `tolerance` seconds."""
    for i, shot in enumerate(shots):
        if shot.index != i:
            raise ValueError(f"shot index {shot.index} at position {i}; expected consecutive 0-based indices")
        if i and abs(shot.interval.start - shots[i - 1].interval.end) > tolerance:
            raise ValueError(
                f"shots not contiguous at index {i}: previous ends {shots[i - 1].interval.end}, "
                f"next starts {shot.interval.start}"
            )
