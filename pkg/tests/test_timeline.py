import numpy as np
import pytest

from newsreel.timeline import (
    Chapter,
    ChapterLabels,
    ChapterList,
    Shot,
    TimeInterval,
    assign_chapter_labels,
    chapters_from_boundaries,
    chapters_from_labels,
    interval_iou,
    validate_partition,
    validate_shots,
)


def make_chapters(edges, duration=None):
    duration = edges[-1] if duration is None else duration
    return ChapterList(
        tuple(Chapter(TimeInterval(edges[i], edges[i + 1])) for i in range(len(edges) - 1)), duration
    )


def make_shots(edges):
    return [Shot(i, TimeInterval(edges[i], edges[i + 1])) for i in range(len(edges) - 1)]


class TestTimeInterval:
    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            TimeInterval(5.0, 5.0)
        with pytest.raises(ValueError):
            TimeInterval(5.0, 4.0)
        with pytest.raises(ValueError):
            TimeInterval(-1.0, 4.0)
        with pytest.raises(ValueError):
            TimeInterval(float("nan"), 4.0)

    def test_duration(self):
        assert TimeInterval(2.0, 5.5).duration == 3.5


class TestIntervalIou:
    def test_identity(self):
        assert interval_iou(TimeInterval(0, 10), TimeInterval(0, 10)) == 1.0

    def test_disjoint(self):
        assert interval_iou(TimeInterval(0, 10), TimeInterval(20, 30)) == 0.0

    def test_partial_overlap(self):
        # overlap 5, union 15, worked by hand
        assert interval_iou(TimeInterval(0, 10), TimeInterval(5, 15)) == pytest.approx(1 / 3, abs=1e-12)

    def test_symmetric_and_bounded(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            s1, s2 = rng.uniform(0, 50, 2)
            a = TimeInterval(s1, s1 + rng.uniform(0.1, 20))
            b = TimeInterval(s2, s2 + rng.uniform(0.1, 20))
            iou = interval_iou(a, b)
            assert iou == interval_iou(b, a)
            assert 0.0 <= iou <= min(a.duration, b.duration) / max(a.duration, b.duration) + 1e-12


class TestChapterLabels:
    def test_valid(self):
        labels = ChapterLabels((0, 0, 1, 1, 2))
        assert labels.n_chapters == 3

    def test_rejects_bad_first(self):
        with pytest.raises(ValueError):
            ChapterLabels((1, 1, 2))

    def test_rejects_skip(self):
        with pytest.raises(ValueError):
            ChapterLabels((0, 0, 2))

    def test_rejects_decrease(self):
        with pytest.raises(ValueError):
            ChapterLabels((0, 1, 0))


class TestAssignChapterLabels:
    def test_max_overlap_example(self):
        # overlaps with chapter 0 / chapter 1: shot0 5/0, shot1 3/1, shot2 0/5
        shots = make_shots([0, 5, 9, 14])
        gt = make_chapters([0, 8, 14])
        assert assign_chapter_labels(shots, gt).labels == (0, 0, 1)

    def test_single_shot_single_chapter(self):
        assert assign_chapter_labels(make_shots([0, 10]), make_chapters([0, 10])).labels == (0,)

    def test_aligned_boundaries(self):
        assert assign_chapter_labels(make_shots([0, 4, 8]), make_chapters([0, 4, 8])).labels == (0, 1)

    def test_shot_outside_chapters_errors(self):
        shots = make_shots([0, 5, 12])
        gt = make_chapters([0, 5], duration=5)
        with pytest.raises(ValueError, match="overlaps no chapter"):
            assign_chapter_labels(shots, gt)

    def test_chapter_inside_one_shot_errors(self):
        shots = make_shots([0, 3, 10])
        gt = make_chapters([0, 4, 5, 10])
        with pytest.raises(ValueError, match="finer than shot granularity"):
            assign_chapter_labels(shots, gt)

    def test_tie_breaks_to_earlier_chapter(self):
        shots = make_shots([0, 4, 8])  # shot 1 overlaps both chapters by 2
        gt = make_chapters([0, 6, 12], duration=12)
        shots.append(Shot(2, TimeInterval(8, 12)))
        assert assign_chapter_labels(shots, gt).labels == (0, 0, 1)

    def test_output_always_valid_on_random_aligned_inputs(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n_shots = int(rng.integers(2, 30))
            edges = np.concatenate([[0.0], np.cumsum(rng.uniform(1, 5, n_shots))])
            shots = make_shots(list(edges))
            n_chapters = int(rng.integers(1, n_shots + 1))
            cut_positions = np.sort(rng.choice(np.arange(1, n_shots), size=n_chapters - 1, replace=False))
            chapter_edges = [0.0] + [edges[c] for c in cut_positions] + [edges[-1]]
            gt = make_chapters(chapter_edges)
            labels = assign_chapter_labels(shots, gt)
            assert len(labels) == n_shots
            assert labels.n_chapters == n_chapters


class TestValidatePartition:
    def test_ok(self):
        assert validate_partition(make_chapters([0, 10, 20])) == []

    def test_overlap(self):
        bad = ChapterList((Chapter(TimeInterval(0, 10)), Chapter(TimeInterval(9, 20))), 20)
        violations = validate_partition(bad)
        assert len(violations) == 1
        assert violations[0].kind == "overlap"
        assert violations[0].index == 1

    def test_gap(self):
        bad = ChapterList((Chapter(TimeInterval(0, 10)), Chapter(TimeInterval(12, 20))), 20)
        violations = validate_partition(bad)
        assert len(violations) == 1
        assert violations[0].kind == "gap"
        assert "(10" in violations[0].detail and "12" in violations[0].detail

    def test_single_epsilon_mutation_gives_single_violation(self):
        rng = np.random.default_rng(11)
        eps = 1e-3
        for _ in range(100):
            n = int(rng.integers(1, 10))
            edges = list(np.concatenate([[0.0], np.cumsum(rng.uniform(1, 5, n))]))
            good = make_chapters(edges)
            assert validate_partition(good) == []
            which = int(rng.integers(0, n))
            mutate_start = bool(rng.integers(0, 2))
            sign = eps if rng.integers(0, 2) else -eps
            chapters = list(good.chapters)
            iv = chapters[which].interval
            if mutate_start:
                chapters[which] = Chapter(TimeInterval(iv.start + abs(sign) if iv.start == 0.0 else iv.start + sign, iv.end))
            else:
                chapters[which] = Chapter(TimeInterval(iv.start, iv.end + sign))
            mutated = ChapterList(tuple(chapters), good.video_duration)
            assert len(validate_partition(mutated)) == 1


class TestChapterAssembly:
    def test_from_boundaries_snaps_and_partitions(self):
        chapters = chapters_from_boundaries([30.0, 10.0, 30.0, -5.0, 200.0], 60.0)
        assert validate_partition(chapters) == []
        assert chapters.starts() == [0.0, 10.0, 30.0]
        assert chapters.chapters[-1].interval.end == 60.0

    def test_from_labels_round_trip(self):
        shots = make_shots([0, 5, 9, 14, 20])
        labels = ChapterLabels((0, 0, 1, 2))
        chapters = chapters_from_labels(shots, labels)
        assert validate_partition(chapters) == []
        assert assign_chapter_labels(shots, chapters).labels == labels.labels


class TestValidateShots:
    def test_contiguous_ok(self):
        validate_shots(make_shots([0, 2, 4.5, 9]))

    def test_gap_errors(self):
        shots = [Shot(0, TimeInterval(0, 2)), Shot(1, TimeInterval(3, 4))]
        with pytest.raises(ValueError, match="not contiguous"):
            validate_shots(shots)
