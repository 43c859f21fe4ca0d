"""Acceptance suite: one test per criterion, run at its stated tolerance.

The end-to-end portion trains the default recurrent model on the default
synthetic corpus (20 train / 5 val / 5 test videos, ~60 shots, ~8 chapters,
modality dims 64/48/21/20) and is the slowest block; everything else is
property-based with independent oracles. conftest prints one PASS/FAIL line
per criterion.
"""

import time

import numpy as np
import pytest

from newsreel import autodiff as ad
from newsreel.audio import MfccParams, compute_mfcc, dct_matrix, mel_energies, mel_filterbank
from newsreel.chaptering import (
    adjacency_mask,
    adjacency_set,
    adjacent_frobenius_loss,
    distance_matrix,
    segment_by_threshold,
    sweep_threshold,
    target_matrix,
)
from newsreel.cli import main as cli_main
from newsreel.datasets import load_video_record, split_dataset
from newsreel.features import assemble_sequence, fit_normalizer
from newsreel.metrics import IOU_THRESHOLDS, TIME_THRESHOLDS, aggregate, evaluate, match_one_to_one
from newsreel.models import ModelSpec, build_model, forward
from newsreel.synthetic import SyntheticSpec, generate_synthetic
from newsreel.timeline import (
    Chapter,
    ChapterLabels,
    ChapterList,
    Shot,
    TimeInterval,
    chapters_from_boundaries,
    chapters_from_labels,
    interval_iou,
)
from newsreel.training import TrainConfig, check_gradients, train
from newsreel.video import FrameDescriptor, detect_shots
from test_metrics import exhaustive_best_hits

GRADIENT_TOLERANCE = 1e-5
SEED = 0


def random_labels(rng, max_len):
    n = int(rng.integers(1, max_len + 1))
    labels = [0]
    for _ in range(n - 1):
        labels.append(labels[-1] + int(rng.integers(0, 2)))
    return ChapterLabels(tuple(labels))


def make_sequences(rng, count, dim):
    from newsreel.features import FeatureSequence

    sequences = []
    for i in range(count):
        t = int(rng.integers(2, 7))
        labels = [0]
        for _ in range(t - 1):
            labels.append(labels[-1] + int(rng.integers(0, 2)))
        shots = [Shot(j, TimeInterval(j * 5.0, (j + 1) * 5.0)) for j in range(t)]
        sequences.append(
            FeatureSequence(f"g{i}", rng.standard_normal((t, dim)), shots, {"all": slice(0, dim)}, ChapterLabels(tuple(labels)))
        )
    return sequences


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    """Default synthetic corpus, split 20/5/5, features assembled and normalized."""
    out = tmp_path_factory.mktemp("acceptance") / "corpus"
    generate_synthetic(SyntheticSpec(seed=SEED), out)
    records = [load_video_record(m) for m in sorted(out.glob("video_*/manifest.json"))]
    splits = split_dataset(records, (2 / 3, 1 / 6, 1 / 6), seed=SEED)
    assert [len(splits[k]) for k in ("train", "val", "test")] == [20, 5, 5]
    norm = fit_normalizer([assemble_sequence(r) for r in splits["train"]])
    return {
        "dir": out,
        "splits": splits,
        "norm": norm,
        "train": [assemble_sequence(r, norm) for r in splits["train"]],
        "val": [assemble_sequence(r, norm) for r in splits["val"]],
        "test": [assemble_sequence(r, norm) for r in splits["test"]],
    }


def test_gradient_oracle():
    """Analytic gradients of loss(distances(forward(x))) vs central differences."""
    start = time.time()
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for trial in range(120):
        if trial % 2 == 0:
            spec = ModelSpec("bilstm", 5, hidden_dim=8, layers=2, projection_dim=4, dropout_rate=0.0, seed=trial)
        else:
            spec = ModelSpec("dnn", 5, dnn_dims=(16, 12, 8), projection_dim=4, dropout_rate=0.0, seed=trial)
        model = build_model(spec)
        for name in model.tensors:
            model.tensors[name] = rng.uniform(-0.5, 0.5, model.tensors[name].shape)
        batch = make_sequences(rng, int(rng.integers(1, 3)), 5)
        worst = max(worst, check_gradients(model, batch, samples_per_tensor=3, step=1e-5, seed=trial))
    elapsed = time.time() - start
    assert worst <= GRADIENT_TOLERANCE, f"max relative error {worst:.3e}"
    assert elapsed < 60.0, f"gradient oracle took {elapsed:.1f} s"


def test_loss_identity_and_masking():
    """Zero at the target and bit-identical under any perturbation outside the mask."""
    rng = np.random.default_rng(SEED)
    for _ in range(500):
        labels = random_labels(rng, 20)
        n = len(labels)
        target = target_matrix(labels)
        assert adjacent_frobenius_loss(target, target, labels) == 0.0
        distances = rng.random((n, n))
        base = adjacent_frobenius_loss(distances, target, labels)
        outside = np.argwhere(adjacency_mask(labels) == 0.0)
        if len(outside):
            i, j = outside[rng.integers(len(outside))]
            perturbed = distances.copy()
            perturbed[i, j] += rng.uniform(-1e6, 1e6)
            assert adjacent_frobenius_loss(perturbed, target, labels) == base


def test_adjacency_oracle():
    """Exact set equality against brute-force double-loop enumeration."""
    rng = np.random.default_rng(SEED)
    for _ in range(200):
        labels = random_labels(rng, 50)
        brute = {
            (i, j)
            for i in range(len(labels))
            for j in range(len(labels))
            if abs(labels.labels[i] - labels.labels[j]) <= 1
        }
        assert adjacency_set(labels) == brute


def test_worked_loss_value():
    """labels [0,0,1,1], D = 0.5 everywhere: sqrt(16 * 0.25) = 2."""
    labels = ChapterLabels((0, 0, 1, 1))
    distances = np.full((4, 4), 0.5)
    loss = adjacent_frobenius_loss(distances, target_matrix(labels), labels)
    assert abs(loss - 2.0) <= 1e-12


def test_metric_suite():
    def make_chapters(edges):
        return ChapterList(
            tuple(Chapter(TimeInterval(edges[i], edges[i + 1])) for i in range(len(edges) - 1)), edges[-1]
        )

    # perfect prediction: all nine headline metrics 1.0
    chapters = make_chapters([0.0, 40.0, 90.0, 140.0])
    perfect = evaluate(chapters, chapters)
    for k in TIME_THRESHOLDS:
        assert perfect.time_f1(k) == 1.0
    for t in IOU_THRESHOLDS:
        assert perfect.iou_f1(t) == 1.0
    assert perfect.time_precision(1.0) == perfect.time_recall(1.0) == 1.0

    # start deltas {0, 2, 30}: P@1s = 1/3 and P@3s = 2/3 exactly
    gt = make_chapters([0.0, 100.0, 200.0, 300.0])
    pred = make_chapters([0.0, 102.0, 230.0, 300.0])
    report = evaluate(pred, gt)
    assert report.time_precision(1.0) == 1 / 3
    assert report.time_precision(3.0) == 2 / 3

    # anti-monotone over 200 random pred/gt pairs
    rng = np.random.default_rng(SEED)
    for _ in range(200):
        def partition():
            n = int(rng.integers(1, 10))
            cuts = sorted(rng.uniform(1.0, 299.0, size=n - 1))
            return make_chapters([0.0] + list(cuts) + [300.0])

        r = evaluate(partition(), partition())
        assert r.time_f1(5.0) >= r.time_f1(3.0) >= r.time_f1(1.0)
        assert r.time_precision(5.0) >= r.time_precision(3.0) >= r.time_precision(1.0)
        assert r.iou_f1(0.5) >= r.iou_f1(0.7) >= r.iou_f1(0.9)

    # greedy matching equals exhaustive assignment on dominant instances
    for _ in range(100):
        n = int(rng.integers(1, 7))
        edges = np.concatenate([[0.0], np.cumsum(rng.uniform(30, 60, size=n))])
        gt = make_chapters(list(edges))
        jitter = rng.uniform(-3.0, 3.0, size=n - 1) if n > 1 else np.zeros(0)
        pred = chapters_from_boundaries(list(edges[1:-1] + jitter), float(edges[-1]))
        for t in IOU_THRESHOLDS:
            score = lambda p, g: interval_iou(p.interval, g.interval)
            assert len(match_one_to_one(pred, gt, score, t)) == exhaustive_best_hits(pred, gt, score, t)
        for k in TIME_THRESHOLDS:
            score = lambda p, g: -abs(p.interval.start - g.interval.start)
            assert len(match_one_to_one(pred, gt, score, -k)) == exhaustive_best_hits(pred, gt, score, -k)


def test_shot_detector():
    rng = np.random.default_rng(SEED)
    palette = [(0.0, 0.9, 0.2), (120.0, 0.7, 0.8), (240.0, 0.8, 0.5), (60.0, 0.2, 0.9)]
    window, min_shot, threshold = 10, 15, 0.15

    # 50 streams with planted abrupt cuts recovered exactly
    for _ in range(50):
        n_cuts = int(rng.integers(1, 6))
        gaps = rng.integers(min_shot + window + 5, 60, size=n_cuts + 1)
        cuts = np.cumsum(gaps)[:-1].tolist()
        total = int(np.cumsum(gaps)[-1])
        descriptors = []
        segment = 0
        cut_set = set(cuts)
        for i in range(total):
            if i in cut_set:
                segment += 1
            hue, sat, val = palette[segment % len(palette)]
            jitter = rng.uniform(-0.01, 0.01, size=2)
            descriptors.append(FrameDescriptor(hue, sat + jitter[0], val + jitter[1], i))
        shots = detect_shots(descriptors, fps=25.0, window=window, threshold=threshold, min_shot=min_shot)
        recovered = [round(s.interval.start * 25.0) for s in shots[1:]]
        assert recovered == cuts

    # 8-frame fade: detected at window 10, missed at window 1, same threshold
    fade = [FrameDescriptor(0.0, 0.0, 0.2 + 0.6 * j / 9.0, 99 + j) for j in range(1, 9)]
    stream = (
        [FrameDescriptor(0.0, 0.0, 0.2, i) for i in range(100)]
        + fade
        + [FrameDescriptor(0.0, 0.0, 0.8, 108 + i) for i in range(100)]
    )
    shared = 0.05
    assert len(detect_shots(stream, fps=25.0, window=10, threshold=shared)) == 2
    assert len(detect_shots(stream, fps=25.0, window=1, threshold=shared)) == 1


def test_mfcc():
    params = MfccParams()

    # orthonormal DCT-II to 1e-12
    basis = dct_matrix(params.mel_bands, params.mel_bands)
    assert np.abs(basis @ basis.T - np.eye(params.mel_bands)).max() < 1e-12

    # 440 Hz sine peaks in the band whose center is nearest 440 Hz, every frame;
    # the spectrum itself is cross-checked against a brute-force DFT oracle
    t = np.arange(16000) / params.sample_rate
    sine = np.sin(2 * np.pi * 440.0 * t)
    weights, centers = mel_filterbank(params)
    expected_band = int(np.abs(centers - 440.0).argmin())
    energies = mel_energies(sine, params)
    assert np.all(energies.argmax(axis=1) == expected_band)

    window = np.hanning(params.frame_length)
    frame = sine[: params.frame_length] * window
    k = np.arange(params.frame_length // 2 + 1)
    n = np.arange(params.frame_length)
    dft = np.abs(np.exp(-2j * np.pi * np.outer(k, n) / params.frame_length) @ frame)
    oracle_band = int((weights @ dft).argmax())
    assert oracle_band == expected_band

    # zero signal: every coefficient row identical
    coeffs = compute_mfcc(np.zeros(8000), params).coefficients
    assert np.all(coeffs == coeffs[0])


def _train_default(corpus):
    dim = corpus["train"][0].features.shape[1]
    spec = ModelSpec("bilstm", dim, hidden_dim=32, layers=2, projection_dim=32, dropout_rate=0.0, seed=SEED)
    cfg = TrainConfig(epochs=10, batch_size=1, base_lr=2e-2, seed=SEED)
    model, history = train(spec, corpus["train"], corpus["val"], cfg)
    return model, history


def _segment_f1(model, sequences, tau):
    reports = []
    for seq in sequences:
        feats = forward(model, seq, mode="eval") if model is not None else seq.features
        pred = segment_by_threshold(distance_matrix(feats), tau, seq.shots)
        reports.append(evaluate(pred, chapters_from_labels(seq.shots, seq.labels)))
    return aggregate(reports)


def test_end_to_end_learnability(corpus):
    """Trained recurrent fusion beats the zero-shot baseline, which beats chance."""
    start = time.time()
    model, history = _train_default(corpus)
    assert history[-1]["train_loss"] < 0.5 * history[0]["train_loss"]

    tau = sweep_threshold(model, corpus["val"])
    trained = _segment_f1(model, corpus["test"], tau)

    tau_zs = sweep_threshold(None, corpus["val"])
    zero_shot = _segment_f1(None, corpus["test"], tau_zs)

    # chance: seeded uniform boundary placement with the true boundary count
    rng = np.random.default_rng(SEED)
    chance_reports = []
    for seq in corpus["test"]:
        gt = chapters_from_labels(seq.shots, seq.labels)
        starts = [s.interval.start for s in seq.shots[1:]]
        chosen = rng.choice(len(starts), size=len(gt) - 1, replace=False) if len(gt) > 1 else []
        pred = chapters_from_boundaries([starts[i] for i in chosen], gt.video_duration)
        chance_reports.append(evaluate(pred, gt))
    chance = aggregate(chance_reports)

    elapsed = time.time() - start
    assert trained.iou_f1(0.5) >= 0.90, f"trained F1@IoU0.5 = {trained.iou_f1(0.5):.3f}"
    assert trained.iou_f1(0.9) >= 0.60, f"trained F1@IoU0.9 = {trained.iou_f1(0.9):.3f}"
    assert trained.iou_f1(0.5) > zero_shot.iou_f1(0.5) > chance.iou_f1(0.5)
    assert elapsed < 600.0, f"end-to-end block took {elapsed:.0f} s"


def test_zero_shot_recall_precision_asymmetry(corpus):
    """At the grid-minimum threshold the zero-shot baseline over-segments."""
    tau_min = 0.05
    reports = []
    for seq in corpus["test"]:
        pred = segment_by_threshold(distance_matrix(seq.features), tau_min, seq.shots)
        reports.append(evaluate(pred, chapters_from_labels(seq.shots, seq.labels)))
    pooled = aggregate(reports)
    assert pooled.time_recall(1.0) > pooled.time_precision(1.0)


def test_cli_determinism(tmp_path, capsys):
    """synth, train, infer and eval reruns with fixed seeds are byte-identical."""

    def run(*argv):
        assert cli_main([str(a) for a in argv]) == 0

    config = tmp_path / "config.json"
    config.write_text(
        """
        {
          "synth": {"n_videos": 8, "shots_per_video": [12, 16], "chapters_per_video": [2, 4],
                     "visual_dim": 12, "text_dim": 8, "mfcc_dim": 5},
          "model": {"architecture": "bilstm", "hidden_dim": 8, "layers": 1, "projection_dim": 8},
          "train": {"epochs": 2, "batch_size": 2},
          "split": {"ratios": [0.5, 0.25, 0.25]}
        }
        """
    )
    outputs = {}
    for tag in ("a", "b"):
        base = tmp_path / tag
        base.mkdir()
        run("--config", config, "--seed", 9, "synth", "--out", base / "corpus")
        run("--config", config, "--seed", 9, "train", "--data", base / "corpus", "--out", base / "model.mdl1")
        manifest = base / "corpus" / "video_001" / "manifest.json"
        run("--config", config, "infer", "--model", base / "model.mdl1", "--manifest", manifest, "--out", base / "pred.csv")
        gt = base / "corpus" / "video_001" / "chapters.csv"
        from newsreel.datasets import read_chapters_csv

        duration = read_chapters_csv(base / "pred.csv").video_duration
        run("eval", "--pred", base / "pred.csv", "--gt", gt, "--duration", duration, "--out", base / "report.json")
        tree = {}
        for path in sorted(base.rglob("*")):
            if path.is_file():
                tree[str(path.relative_to(base))] = path.read_bytes()
        outputs[tag] = tree
    capsys.readouterr()
    assert outputs["a"].keys() == outputs["b"].keys()
    for name in outputs["a"]:
        assert outputs["a"][name] == outputs["b"][name], f"{name} differs between reruns"
