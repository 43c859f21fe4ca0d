"""From fused features to chapters: distances, adjacency-masked loss, thresholding.

The predicted matrix D holds scaled cosine distances (1 - cos)/2 in [0, 1];
the target D* is binary, 0 within a chapter and 1 across. The training loss is
the Frobenius norm of D - D* restricted to ordered shot pairs whose chapters
are identical or adjacent; everything further apart is masked out. Chapter
boundaries come from thresholding consecutive-shot distances only, since those
are the only pairs that define a boundary location.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .timeline import ChapterLabels, ChapterList, Shot, chapters_from_boundaries

DEFAULT_TAU_GRID = tuple(np.round(np.arange(0.05, 0.951, 0.05), 2))


def _label_array(labels) -> np.ndarray:
    if isinstance(labels, ChapterLabels):
        return np.asarray(labels.labels, dtype=np.int64)
    return np.asarray(ChapterLabels(tuple(labels)).labels, dtype=np.int64)


def distance_graph(features: ad.Var) -> ad.Var:
    """Differentiable scaled cosine distance matrix over feature rows.

    Zero-norm rows get distance 0.5 to everything (cosine treated as 0); the
    diagonal is forced to exact zero and the result symmetrized, since BLAS
    does not guarantee either to the last bit.
    """
    n = features.value.shape[0]
    gram = ad.matmul(features, ad.transpose(features))
    norms = ad.sqrt(ad.vsum(ad.square(features), axis=1, keepdims=True))
    inv = ad.inv_safe(norms)
    cos = ad.mul(gram, ad.mul(inv, ad.transpose(inv)))
    distances = ad.mul(ad.sub(ad.const(np.ones((n, n))), cos), ad.const(0.5))
    distances = ad.mul(distances, ad.const(1.0 - np.eye(n)))
    return ad.mul(ad.add(distances, ad.transpose(distances)), ad.const(0.5))


def distance_matrix(features: np.ndarray, metric: str = "cosine") -> np.ndarray:
    """Pairwise shot distances in [0, 1]; symmetric with a zero diagonal.

    "cosine" (default) is (1 - cos)/2, invariant to per-row positive scaling.
    "euclidean" is pairwise L2 min-max squashed into [0, 1] per matrix; it is
    kept behind this switch for comparison runs only.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 1:
        raise ValueError(f"expected a T x d feature matrix, got shape {features.shape}")
    if not np.isfinite(features).all():
        raise ValueError("non-finite feature rows")
    if metric == "cosine":
        return np.clip(distance_graph(ad.const(features)).value, 0.0, 1.0)
    if metric == "euclidean":
        sq = np.sum(features**2, axis=1)
        d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * features @ features.T, 0.0)
        d = np.sqrt(d2)
        top = d.max()
        d = d / top if top > 0 else d
        np.fill_diagonal(d, 0.0)
        return np.clip((d + d.T) / 2.0, 0.0, 1.0)
    raise ValueError(f"unknown metric {metric!r}")


def target_matrix(labels) -> np.ndarray:
    """Binary ground truth: 0 for shots sharing a chapter, 1 across chapters."""
    arr = _label_array(labels)
    return (arr[:, None] != arr[None, :]).astype(np.float64)


def adjacency_mask(labels) -> np.ndarray:
    """1.0 for ordered pairs whose chapter labels differ by at most one."""
    arr = _label_array(labels)
    return (np.abs(arr[:, None] - arr[None, :]) <= 1).astype(np.float64)


def adjacency_set(labels) -> set[tuple[int, int]]:
    """The ordered index pairs (i, j) with |L_i - L_j| <= 1, diagonal included."""
    mask = adjacency_mask(labels)
    return {(int(i), int(j)) for i, j in np.argwhere(mask > 0)}


def loss_graph(distances: ad.Var, target: np.ndarray, labels) -> ad.Var:
    mask = adjacency_mask(labels)
    masked = ad.mul(ad.const(mask), ad.square(ad.sub(distances, ad.const(target))))
    return ad.sqrt(ad.vsum(masked))


def adjacent_frobenius_loss(distances: np.ndarray, target: np.ndarray, labels) -> float:
    """sqrt of the sum of squared D - D* entries over adjacent-chapter pairs.

    Pairs outside the adjacency mask contribute nothing, bit-exactly: they are
    zeroed before summation.
    """
    distances = np.asarray(distances, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if distances.shape != target.shape:
        raise ValueError(f"shape mismatch: distances {distances.shape}, target {target.shape}")
    mask = adjacency_mask(labels)
    if mask.shape != distances.shape:
        raise ValueError(f"{mask.shape[0]} labels for a {distances.shape[0]}-shot matrix")
    return float(np.sqrt((mask * (distances - target) ** 2).sum()))


def consecutive_distances(distances: np.ndarray) -> np.ndarray:
    return np.diagonal(np.asarray(distances), offset=1).copy()


def segment_by_threshold(
    distances: np.ndarray, tau: float, shots: list[Shot], video_duration: float | None = None
) -> ChapterList:
    """Boundary between shots i and i+1 whenever D[i, i+1] > tau.

    The chapter count is exactly 1 + the number of exceeding consecutive pairs
    and non-increasing in tau; the output always satisfies the partition
    invariant (first start snaps to 0, last end to the video duration).
    """
    if len(distances) != len(shots):
        raise ValueError(f"{len(distances)} distance rows for {len(shots)} shots")
    if video_duration is None:
        video_duration = shots[-1].interval.end
    boundaries = [
        shots[i + 1].interval.start
        for i in range(len(shots) - 1)
        if distances[i, i + 1] > tau
    ]
    return chapters_from_boundaries(boundaries, video_duration)


def sweep_threshold_distances(
    distance_list: list[np.ndarray],
    shots_list: list[list[Shot]],
    gt_list: list[ChapterList],
    grid=DEFAULT_TAU_GRID,
) -> float:
    """Grid value maximizing micro-averaged F1 at IoU 0.5; ties take the smaller tau."""
    from .metrics import evaluate, aggregate

    if not distance_list:
        raise ValueError("empty validation set")
    if not len(distance_list) == len(shots_list) == len(gt_list):
        raise ValueError("distance/shots/ground-truth lists must align")
    best_tau, best_f1 = None, -1.0
    for tau in grid:
        reports = [
            evaluate(segment_by_threshold(d, tau, shots, gt.video_duration), gt)
            for d, shots, gt in zip(distance_list, shots_list, gt_list)
        ]
        f1 = aggregate(reports).iou_f1(0.5)
        if f1 > best_f1:
            best_tau, best_f1 = float(tau), f1
    return best_tau


def sweep_threshold(model, val_sequences, grid=DEFAULT_TAU_GRID) -> float:
    """Sweep over a validation set; model None scores the raw features (zero-shot)."""
    from .models import forward
    from .timeline import chapters_from_labels

    distance_list, shots_list, gt_list = [], [], []
    for seq in val_sequences:
        if seq.labels is None:
            raise ValueError(f"{seq.video_id}: validation sequences need chapter labels")
        feats = forward(model, seq, mode="eval") if model is not None else seq.features
        distance_list.append(distance_matrix(feats))
        shots_list.append(seq.shots)
        gt_list.append(chapters_from_labels(seq.shots, seq.labels))
    return sweep_threshold_distances(distance_list, shots_list, gt_list, grid)


def zero_shot_segment(record, norm, tau: float) -> ChapterList:
    """Threshold the distance matrix of the raw normalized concatenated features."""
    from .features import assemble_sequence

    seq = assemble_sequence(record, norm)
    return segment_by_threshold(distance_matrix(seq.features), tau, seq.shots, record.duration)


def kmeans(points: np.ndarray, k: int, seed: int = 0, iterations: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Plain Lloyd iterations with greedy farthest-point init; deterministic per seed.

    Empty clusters are reseeded to the point farthest from its center. Returns
    (assignments, centers).
    """
    points = np.asarray(points, dtype=np.float64)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(points) < k:
        raise ValueError(f"cannot form {k} clusters from {len(points)} points")
    rng = np.random.default_rng(seed)
    centers = [points[rng.integers(len(points))]]
    for _ in range(1, k):
        d2 = np.min([np.sum((points - c) ** 2, axis=1) for c in centers], axis=0)
        centers.append(points[int(d2.argmax())])
    centers = np.stack(centers)

    assignment = np.zeros(len(points), dtype=np.int64)
    for _ in range(iterations):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assignment = d2.argmin(axis=1)
        for c in range(k):
            members = new_assignment == c
            if members.any():
                centers[c] = points[members].mean(axis=0)
            else:
                centers[c] = points[int(d2.min(axis=1).argmax())]
        if (new_assignment == assignment).all():
            break
        assignment = new_assignment
    return assignment, centers


def anchor_segment(
    shots: list[Shot],
    visual_embeddings: np.ndarray,
    k: int,
    face_flags: list[bool] | None = None,
    seed: int = 0,
    video_duration: float | None = None,
) -> ChapterList:
    """Presenter-recurrence baseline.

    Cluster candidate shots (face-flagged ones, or all shots when no flags are
    available) by visual embedding; the most populous cluster is the anchor.
    A chapter starts at every anchor shot that does not directly follow another
    anchor shot; the first chapter is forced to start at 0.
    """
    if video_duration is None:
        video_duration = shots[-1].interval.end
    candidates = [s.index for s in shots if face_flags is None or face_flags[s.index]]
    if len(candidates) < k:
        raise ValueError(f"{len(candidates)} candidate shots cannot form {k} clusters")
    assignment, _ = kmeans(np.asarray(visual_embeddings, dtype=np.float64)[candidates], k, seed=seed)
    counts = np.bincount(assignment, minlength=k)
    anchor_cluster = int(counts.argmax())  # argmax ties break to the lower index
    anchor_shots = {candidates[i] for i in range(len(candidates)) if assignment[i] == anchor_cluster}
    boundaries = [
        shots[i].interval.start for i in sorted(anchor_shots) if i > 0 and (i - 1) not in anchor_shots
    ]
    return chapters_from_boundaries(boundaries, video_duration)
