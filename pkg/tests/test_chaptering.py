import numpy as np
import pytest

from newsreel import autodiff as ad
from newsreel.chaptering import (
    DEFAULT_TAU_GRID,
    adjacency_mask,
    adjacency_set,
    adjacent_frobenius_loss,
    anchor_segment,
    consecutive_distances,
    distance_graph,
    distance_matrix,
    kmeans,
    loss_graph,
    segment_by_threshold,
    sweep_threshold_distances,
    target_matrix,
)
from newsreel.timeline import ChapterLabels, Shot, TimeInterval, chapters_from_labels, validate_partition


def random_labels(rng, max_len=50):
    n = int(rng.integers(1, max_len + 1))
    labels = [0]
    for _ in range(n - 1):
        labels.append(labels[-1] + int(rng.integers(0, 2)))
    return ChapterLabels(tuple(labels))


def make_shots(n, step=5.0):
    return [Shot(i, TimeInterval(i * step, (i + 1) * step)) for i in range(n)]


class TestDistanceMatrix:
    def test_identical_rows_zero(self):
        d = distance_matrix(np.tile([1.0, 2.0, 3.0], (4, 1)))
        assert np.allclose(d, 0.0, atol=1e-12)

    def test_antipodal_rows(self):
        d = distance_matrix(np.array([[1.0, 0.0], [-1.0, 0.0]]))
        assert d[0, 1] == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_rows(self):
        d = distance_matrix(np.array([[1.0, 0.0], [0.0, 2.0]]))
        assert d[0, 1] == pytest.approx(0.5, abs=1e-12)

    def test_zero_norm_row(self):
        d = distance_matrix(np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]]))
        assert d[0, 1] == d[1, 0] == pytest.approx(0.5)
        assert d[0, 2] == pytest.approx(0.5)
        assert d[0, 0] == d[2, 2] == 0.0

    def test_invariants(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            f = rng.standard_normal((int(rng.integers(1, 12)), 6))
            d = distance_matrix(f)
            assert np.array_equal(d, d.T)
            assert np.all(np.diag(d) == 0.0)
            assert d.min() >= 0.0 and d.max() <= 1.0

    def test_row_scale_invariance(self):
        rng = np.random.default_rng(1)
        f = rng.standard_normal((6, 4))
        scaled = f.copy()
        scaled[2] *= 37.5
        assert np.allclose(distance_matrix(f), distance_matrix(scaled), atol=1e-12)

    def test_non_finite_errors(self):
        with pytest.raises(ValueError, match="finite"):
            distance_matrix(np.array([[np.inf, 0.0]]))

    def test_euclidean_switch(self):
        f = np.array([[0.0, 0.0], [3.0, 4.0], [6.0, 8.0]])
        d = distance_matrix(f, metric="euclidean")
        assert d[0, 2] == pytest.approx(1.0)
        assert d[0, 1] == pytest.approx(0.5)
        assert np.all(np.diag(d) == 0.0)


class TestTargetMatrix:
    def test_two_shots(self):
        assert np.array_equal(target_matrix(ChapterLabels((0, 1))), [[0, 1], [1, 0]])

    def test_block_structure(self):
        t = target_matrix(ChapterLabels((0, 0, 1, 1)))
        assert np.array_equal(t, np.block([[np.zeros((2, 2)), np.ones((2, 2))], [np.ones((2, 2)), np.zeros((2, 2))]]))

    def test_single_chapter(self):
        assert np.array_equal(target_matrix(ChapterLabels((0, 0, 0))), np.zeros((3, 3)))


class TestAdjacency:
    def test_three_chapters(self):
        pairs = adjacency_set(ChapterLabels((0, 1, 2)))
        assert len(pairs) == 7
        assert (0, 2) not in pairs and (2, 0) not in pairs

    def test_single_chapter_all_pairs(self):
        assert len(adjacency_set(ChapterLabels((0, 0)))) == 4

    def test_two_chapters_all_pairs(self):
        assert len(adjacency_set(ChapterLabels((0, 0, 1, 1)))) == 16

    def test_matches_brute_force_on_200_random_vectors(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            labels = random_labels(rng)
            expected = {
                (i, j)
                for i in range(len(labels))
                for j in range(len(labels))
                if abs(labels.labels[i] - labels.labels[j]) <= 1
            }
            assert adjacency_set(labels) == expected


class TestLoss:
    def test_perfect_prediction_zero(self):
        labels = ChapterLabels((0, 0, 1, 2, 2))
        t = target_matrix(labels)
        assert adjacent_frobenius_loss(t, t, labels) == 0.0

    def test_worked_value_half_everywhere(self):
        # 16 adjacent ordered pairs each off by 0.5: sqrt(16 * 0.25) = 2.0
        labels = ChapterLabels((0, 0, 1, 1))
        d = np.full((4, 4), 0.5)
        assert adjacent_frobenius_loss(d, target_matrix(labels), labels) == pytest.approx(2.0, abs=1e-12)

    def test_symmetric_pair_counts_twice(self):
        labels = ChapterLabels((0, 0, 1, 1))
        t = target_matrix(labels)
        d = t.copy()
        d[0, 3] -= 0.8
        d[3, 0] -= 0.8
        assert adjacent_frobenius_loss(d, t, labels) == pytest.approx(0.8 * np.sqrt(2.0), abs=1e-12)

    def test_masking_bit_exact_500_cases(self):
        rng = np.random.default_rng(7)
        for _ in range(500):
            labels = random_labels(rng, max_len=20)
            n = len(labels)
            t = target_matrix(labels)
            d = rng.random((n, n))
            base = adjacent_frobenius_loss(d, t, labels)
            outside = np.argwhere(adjacency_mask(labels) == 0.0)
            if len(outside):
                i, j = outside[rng.integers(len(outside))]
                perturbed = d.copy()
                perturbed[i, j] += rng.uniform(-100, 100)
                assert adjacent_frobenius_loss(perturbed, t, labels) == base

    def test_equals_dense_masked_frobenius_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            labels = random_labels(rng, max_len=15)
            n = len(labels)
            d = rng.random((n, n))
            t = target_matrix(labels)
            arr = np.asarray(labels.labels)
            mask = (np.abs(arr[:, None] - arr[None, :]) <= 1).astype(float)
            oracle = np.linalg.norm(mask * (d - t), ord="fro")
            assert adjacent_frobenius_loss(d, t, labels) == pytest.approx(oracle, abs=1e-12)

    def test_shape_mismatch_errors(self):
        with pytest.raises(ValueError, match="shape"):
            adjacent_frobenius_loss(np.zeros((2, 2)), np.zeros((3, 3)), ChapterLabels((0, 1)))

    def test_graph_matches_plain_loss(self):
        rng = np.random.default_rng(4)
        labels = ChapterLabels((0, 0, 1, 2))
        f = rng.standard_normal((4, 5))
        d_var = distance_graph(ad.const(f))
        loss_var = loss_graph(d_var, target_matrix(labels), labels)
        plain = adjacent_frobenius_loss(distance_matrix(f), target_matrix(labels), labels)
        assert float(loss_var.value) == pytest.approx(plain, abs=1e-12)

    def test_gradient_zero_at_exact_minimum(self):
        labels = ChapterLabels((0, 1))
        # features engineered so D == D* exactly: antipodal rows give distance 1
        f = ad.param(np.array([[1.0, 0.0], [-1.0, 0.0]]))
        loss = loss_graph(distance_graph(f), target_matrix(labels), labels)
        assert float(loss.value) == 0.0
        ad.backward(loss)
        assert np.array_equal(f.grad, np.zeros((2, 2)))


class TestSegmentByThreshold:
    def test_worked_example(self):
        shots = make_shots(4)
        d = np.zeros((4, 4))
        for i, val in enumerate([0.1, 0.9, 0.2]):
            d[i, i + 1] = d[i + 1, i] = val
        chapters = segment_by_threshold(d, 0.5, shots)
        assert len(chapters) == 2
        assert chapters.starts() == [0.0, 10.0]

    def test_all_below_single_chapter(self):
        shots = make_shots(5)
        assert len(segment_by_threshold(np.zeros((5, 5)), 0.5, shots)) == 1

    def test_all_above_one_chapter_per_shot(self):
        shots = make_shots(5)
        assert len(segment_by_threshold(np.ones((5, 5)) - np.eye(5), 0.5, shots)) == 5

    def test_count_formula_and_monotonicity(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(2, 20))
            d = rng.random((n, n))
            d = (d + d.T) / 2
            np.fill_diagonal(d, 0.0)
            shots = make_shots(n)
            previous = None
            for tau in (0.1, 0.3, 0.5, 0.7, 0.9):
                chapters = segment_by_threshold(d, tau, shots)
                expected = 1 + sum(consecutive_distances(d) > tau)
                assert len(chapters) == expected
                assert validate_partition(chapters) == []
                if previous is not None:
                    assert len(chapters) <= previous
                previous = len(chapters)


class TestSweep:
    def _distances(self, consecutive, n):
        d = np.zeros((n, n))
        for i, val in enumerate(consecutive):
            d[i, i + 1] = d[i + 1, i] = val
        return d

    def test_separable_case_returns_grid_minimum_in_band(self):
        # true boundary at shot 2 with D=0.9; within-chapter D=0.1
        shots = make_shots(4)
        gt = chapters_from_labels(shots, ChapterLabels((0, 0, 1, 1)))
        d = self._distances([0.1, 0.9, 0.1], 4)
        tau = sweep_threshold_distances([d], [shots], [gt])
        in_band = [g for g in DEFAULT_TAU_GRID if 0.1 <= g < 0.9]
        assert tau == pytest.approx(min(in_band))

    def test_single_chapter_videos_prefer_grid_max(self):
        shots = make_shots(20)
        gt = chapters_from_labels(shots, ChapterLabels((0,) * 20))
        d = self._distances(list(np.linspace(0.05, 0.94, 19)), 20)
        tau = sweep_threshold_distances([d], [shots], [gt])
        assert tau == pytest.approx(max(DEFAULT_TAU_GRID))

    def test_grid_of_one(self):
        shots = make_shots(3)
        gt = chapters_from_labels(shots, ChapterLabels((0, 1, 1)))
        assert sweep_threshold_distances([np.zeros((3, 3))], [shots], [gt], grid=(0.4,)) == 0.4

    def test_empty_set_errors(self):
        with pytest.raises(ValueError, match="empty"):
            sweep_threshold_distances([], [], [])


class TestKmeans:
    def test_well_separated_clusters(self):
        rng = np.random.default_rng(5)
        a = rng.normal(0.0, 0.05, (10, 3))
        b = rng.normal(5.0, 0.05, (6, 3))
        labels, centers = kmeans(np.concatenate([a, b]), 2, seed=1)
        assert len(set(labels[:10])) == 1
        assert len(set(labels[10:])) == 1
        assert labels[0] != labels[-1]

    def test_deterministic(self):
        rng = np.random.default_rng(6)
        points = rng.standard_normal((30, 4))
        l1, c1 = kmeans(points, 3, seed=9)
        l2, c2 = kmeans(points, 3, seed=9)
        assert np.array_equal(l1, l2) and np.array_equal(c1, c2)

    def test_k_less_than_one_errors(self):
        with pytest.raises(ValueError):
            kmeans(np.zeros((3, 2)), 0)


class TestAnchorSegment:
    def test_largest_cluster_wins(self):
        rng = np.random.default_rng(8)
        anchors = rng.normal(0.0, 0.05, (5, 4))
        others = rng.normal(6.0, 0.05, (3, 4))
        embeddings = np.concatenate([anchors, others])
        shots = make_shots(8)
        # anchor shots are 0..4; boundary starts only at shot 0 run, so one chapter
        chapters = anchor_segment(shots, embeddings, k=2, seed=2)
        assert validate_partition(chapters) == []
        assert len(chapters) == 1

    def test_interleaved_anchor_starts_new_chapters(self):
        # the anchor recurs across stories, so with one cluster per story plus
        # one for the anchor, the anchor cluster is the most populous
        rng = np.random.default_rng(10)
        means = {
            "anchor": np.zeros(4),
            "story0": np.array([8.0, 0.0, 0.0, 0.0]),
            "story1": np.array([0.0, 8.0, 0.0, 0.0]),
            "story2": np.array([0.0, 0.0, 8.0, 0.0]),
        }
        roles = ["anchor", "story0", "story0", "anchor", "story1", "story1", "anchor", "story2"]
        embeddings = np.stack([means[r] + rng.normal(0, 0.05, 4) for r in roles])
        shots = make_shots(8)
        chapters = anchor_segment(shots, embeddings, k=4, seed=0)
        assert chapters.starts() == [0.0, 15.0, 30.0]

    def test_k1_degenerates_to_single_chapter(self):
        rng = np.random.default_rng(11)
        chapters = anchor_segment(make_shots(6), rng.standard_normal((6, 3)), k=1)
        assert len(chapters) == 1

    def test_face_flags_filter_candidates(self):
        rng = np.random.default_rng(12)
        embeddings = rng.standard_normal((6, 3))
        embeddings[1] = embeddings[3] = [9.0, 9.0, 9.0]
        flags = [False, True, False, True, False, False]
        chapters = anchor_segment(make_shots(6), embeddings, k=1, face_flags=flags)
        # candidates 1 and 3 are both anchors; chapters start at shots 1 and 3
        assert chapters.starts() == [0.0, 5.0, 15.0]
