"""Command-line pipeline: synth, detect-shots, mfcc, align, train, infer, baselines, eval.

One JSON config document carries every tunable with defaults; flags win over
config values. Machine output (CSV/JSON/stores) goes to files or stdout,
progress lines go to stderr, and every source of randomness flows from the
seed, so reruns with identical inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import audio as audio_mod
from . import video as video_mod
from .chaptering import (
    DEFAULT_TAU_GRID,
    anchor_segment,
    distance_matrix,
    segment_by_threshold,
    sweep_threshold,
    zero_shot_segment,
)
from .datasets import ManifestError, load_video_record, split_dataset, write_chapters_csv
from .stores import StoreFormatError
from .features import NormalizerStats, assemble_sequence, fit_normalizer, load_normalizer
from .metrics import aggregate, evaluate, format_table
from .models import ModelSpec, forward
from .stores import write_store
from .synthetic import SyntheticSpec, generate_synthetic, load_corpus
from .timeline import chapters_from_labels
from .training import TrainConfig, load_model, save_model, train
from .datasets import read_chapters_csv

DEFAULT_CONFIG = {
    "seed": 0,
    "jobs": 0,  # 0 means: take NEWSREEL_JOBS, else 1
    "synth": {
        "n_videos": 30,
        "shots_per_video": [55, 65],
        "chapters_per_video": [7, 9],
        "visual_dim": 64,
        "text_dim": 48,
        "mfcc_dim": 20,
        "shot_seconds": [3.0, 7.0],
        "topics": 12,
        "min_chapter_shots": 3,
        "separation": 1.0,
        "noise_scale": 0.8,
        "text_noise_scale": 2.0,
        "audio_noise_scale": 2.0,
        "anchor_pattern": True,
        "anchor_noise_scale": 0.25,
        "face_rate": 0.3,
    },
    "shots": {"window": 10, "threshold": 0.15, "min_shot": 15},
    "mfcc": {
        "sample_rate": 16000,
        "frame_length": 400,
        "hop_length": 160,
        "mel_bands": 40,
        "num_coefficients": 20,
        "log_floor": 1e-10,
    },
    "model": {
        "architecture": "bilstm",
        "hidden_dim": 128,
        "layers": 3,
        "dnn_dims": [4000, 3000, 1000],
        "projection_dim": 128,
        "dropout_rate": 0.1,
    },
    "train": {"epochs": 10, "batch_size": 1, "base_lr": 2e-2, "grad_check": False},
    "split": {"ratios": [0.72, 0.18, 0.10]},
    "chaptering": {"tau": 0.5, "grid": list(DEFAULT_TAU_GRID)},
}


class ConfigError(Exception):
    pass


def _merge_config(defaults: dict, overrides: dict, path="config") -> dict:
    merged = dict(defaults)
    for key, value in overrides.items():
        if key not in defaults:
            raise ConfigError(f"{path}: unknown key {key!r}")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{path}.{key}: expected an object")
            merged[key] = _merge_config(defaults[key], value, f"{path}.{key}")
        else:
            merged[key] = value
    return merged


def load_config(path: str | None) -> dict:
    if path is None:
        return json.loads(json.dumps(DEFAULT_CONFIG))
    file_path = Path(path)
    if not file_path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        overrides = json.loads(file_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return _merge_config(DEFAULT_CONFIG, overrides)


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _jobs(config, args) -> int:
    if getattr(args, "jobs", None):
        return args.jobs
    if config["jobs"]:
        return config["jobs"]
    return int(os.environ.get("NEWSREEL_JOBS", "1"))


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _mfcc_params(config) -> audio_mod.MfccParams:
    return audio_mod.MfccParams(**config["mfcc"])


def _synth_spec(config, seed) -> SyntheticSpec:
    section = dict(config["synth"])
    for key in ("shots_per_video", "chapters_per_video", "shot_seconds"):
        section[key] = tuple(section[key])
    return SyntheticSpec(seed=seed, **section)


def _normalizer_to_json(stats: NormalizerStats) -> dict:
    return {"mean": stats.mean.tolist(), "std": stats.std.tolist()}


def _normalizer_from_json(data: dict) -> NormalizerStats:
    return NormalizerStats(np.asarray(data["mean"], dtype=np.float64), np.asarray(data["std"], dtype=np.float64))


def cmd_synth(args) -> int:
    config = load_config(args.config)
    seed = args.seed if args.seed is not None else config["seed"]
    spec = _synth_spec(config, seed)
    if args.videos is not None:
        spec = SyntheticSpec(**{**asdict(spec), "n_videos": args.videos})
    manifests = generate_synthetic(spec, args.out)
    _log(f"wrote {len(manifests)} videos under {args.out}")
    return 0


def cmd_detect_shots(args) -> int:
    config = load_config(args.config)
    section = config["shots"]
    descriptors = video_mod.read_descriptor_csv(args.descriptors)
    shots = video_mod.detect_shots(
        descriptors,
        fps=args.fps,
        window=args.window if args.window is not None else section["window"],
        threshold=args.threshold if args.threshold is not None else section["threshold"],
        min_shot=args.min_shot if args.min_shot is not None else section["min_shot"],
    )
    payload = {
        "fps": args.fps,
        "shots": [{"start_s": s.interval.start, "end_s": s.interval.end} for s in shots],
    }
    _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", args.out)
    _log(f"{len(shots)} shots")
    return 0


def cmd_mfcc(args) -> int:
    config = load_config(args.config)
    if args.audio.endswith(".wav"):
        samples, rate = audio_mod.read_wav(args.audio)  # the file's rate wins
    else:
        samples = audio_mod.read_raw_float32(args.audio)
        rate = args.rate if args.rate is not None else config["mfcc"]["sample_rate"]
    params = audio_mod.MfccParams(**{**config["mfcc"], "sample_rate": rate})
    matrix = audio_mod.compute_mfcc(samples, params)
    if args.shots:
        shots_doc = json.loads(Path(args.shots).read_text(encoding="utf-8"))
        rows = [
            audio_mod.pool_mfcc(matrix, s["start_s"], s["end_s"]) for s in shots_doc["shots"]
        ]
        write_store(args.out, np.stack(rows))
        _log(f"pooled {len(rows)} shot rows -> {args.out}")
    else:
        write_store(args.out, matrix.coefficients)
        _log(f"{matrix.coefficients.shape[0]} frames -> {args.out}")
    return 0


def cmd_align(args) -> int:
    config = load_config(args.config)
    norm = load_normalizer(args.norm) if args.norm else None
    record = load_video_record(args.manifest)
    seq = assemble_sequence(record, norm=norm, mfcc_params=_mfcc_params(config))
    write_store(args.out, seq.features)
    _log(f"{seq.features.shape[0]} x {seq.features.shape[1]} features -> {args.out}")
    return 0


def cmd_train(args) -> int:
    config = load_config(args.config)
    seed = args.seed if args.seed is not None else config["seed"]
    manifests = load_corpus(args.data)
    records = [load_video_record(m) for m in manifests]
    splits = split_dataset(records, tuple(config["split"]["ratios"]), seed=seed)
    _log(f"split: {len(splits['train'])} train / {len(splits['val'])} val / {len(splits['test'])} test")

    mfcc_params = _mfcc_params(config)
    jobs = _jobs(config, args)

    def assemble_all(records_subset, norm):
        def build(record):
            return assemble_sequence(record, norm=norm, mfcc_params=mfcc_params)

        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                return list(pool.map(build, records_subset))
        return [build(r) for r in records_subset]

    raw_train = assemble_all(splits["train"], None)
    norm = fit_normalizer(raw_train)
    train_seqs = [s for s in assemble_all(splits["train"], norm)]
    val_seqs = [s for s in assemble_all(splits["val"], norm)]

    section = config["model"]
    spec = ModelSpec(
        architecture=section["architecture"],
        input_dim=train_seqs[0].features.shape[1],
        hidden_dim=section["hidden_dim"],
        layers=section["layers"],
        dnn_dims=tuple(section["dnn_dims"]),
        projection_dim=section["projection_dim"],
        dropout_rate=section["dropout_rate"],
        seed=seed,
    )
    cfg = TrainConfig(
        epochs=args.epochs if args.epochs is not None else config["train"]["epochs"],
        batch_size=config["train"]["batch_size"],
        base_lr=config["train"]["base_lr"],
        seed=seed,
        grad_check=config["train"]["grad_check"],
    )
    _log(f"training {spec.architecture} on {len(train_seqs)} videos for {cfg.epochs} epochs")
    model, history = train(spec, train_seqs, val_seqs, cfg)
    tau = sweep_threshold(model, val_seqs, grid=config["chaptering"]["grid"]) if val_seqs else config["chaptering"]["tau"]
    extra = {
        "tau": tau,
        "normalizer": _normalizer_to_json(norm),
        "history": history,
        "seed": seed,
    }
    save_model(args.out, model, extra=extra)
    if args.history:
        Path(args.history).write_text(json.dumps(history, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    _log(f"tau={tau}  checkpoint -> {args.out}")
    return 0


def cmd_infer(args) -> int:
    config = load_config(args.config)
    model, extra = load_model(args.model)
    norm = _normalizer_from_json(extra["normalizer"]) if "normalizer" in extra else None
    tau = args.tau if args.tau is not None else extra.get("tau", config["chaptering"]["tau"])
    record = load_video_record(args.manifest)
    seq = assemble_sequence(record, norm=norm, mfcc_params=_mfcc_params(config))
    fused = forward(model, seq, mode="eval")
    chapters = segment_by_threshold(distance_matrix(fused), tau, seq.shots, record.duration)
    write_chapters_csv(args.out, chapters)
    _log(f"{len(chapters)} chapters at tau={tau} -> {args.out}")
    return 0


def cmd_baseline(args) -> int:
    config = load_config(args.config)
    record = load_video_record(args.manifest)
    if args.mode == "zero-shot":
        norm = load_normalizer(args.norm) if args.norm else None
        tau = args.tau if args.tau is not None else config["chaptering"]["tau"]
        chapters = zero_shot_segment(record, norm, tau)
    else:
        from .stores import read_store

        seed = args.seed if args.seed is not None else config["seed"]
        embeddings = read_store(record.visual_path).astype(np.float64)
        chapters = anchor_segment(
            record.shots, embeddings, k=args.k, face_flags=record.face_flags, seed=seed,
            video_duration=record.duration,
        )
    write_chapters_csv(args.out, chapters)
    _log(f"{len(chapters)} chapters -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    pred = read_chapters_csv(args.pred, video_duration=args.duration)
    gt = read_chapters_csv(args.gt, video_duration=args.duration)
    report = evaluate(pred, gt)
    if args.table:
        _emit(format_table({"run": report}) + "\n", args.out)
    else:
        _emit(report.to_json() + "\n", args.out)
    return 0


def cmd_sweep_tau(args) -> int:
    config = load_config(args.config)
    seed = args.seed if args.seed is not None else config["seed"]
    manifests = load_corpus(args.data)
    records = [load_video_record(m) for m in manifests]
    splits = split_dataset(records, tuple(config["split"]["ratios"]), seed=seed)
    subset = splits[args.split]
    if args.model:
        model, extra = load_model(args.model)
        norm = _normalizer_from_json(extra["normalizer"]) if "normalizer" in extra else None
    else:
        model = None
        raw = [assemble_sequence(r, mfcc_params=_mfcc_params(config)) for r in splits["train"]]
        norm = fit_normalizer(raw)
    sequences = [assemble_sequence(r, norm=norm, mfcc_params=_mfcc_params(config)) for r in subset]
    tau = sweep_threshold(model, sequences, grid=config["chaptering"]["grid"])
    _emit(json.dumps({"tau": tau}, sort_keys=True) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="newsreel", description=__doc__)
    parser.add_argument("--config", help="JSON config file (defaults apply otherwise)")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--jobs", type=int, help="worker pool size (default: NEWSREEL_JOBS or 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--videos", type=int, help="override synth.n_videos")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("detect-shots", help="windowed shot detection over a descriptor CSV")
    p.add_argument("--descriptors", required=True, help="CSV frame_index,hue,saturation,value")
    p.add_argument("--fps", type=float, required=True)
    p.add_argument("--window", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--min-shot", type=int, dest="min_shot")
    p.add_argument("--out", help="write shots JSON here instead of stdout")
    p.set_defaults(func=cmd_detect_shots)

    p = sub.add_parser("mfcc", help="cepstral features from a waveform")
    p.add_argument("--audio", required=True, help=".wav or raw little-endian float32")
    p.add_argument("--rate", type=int, help="sample rate for raw input")
    p.add_argument("--shots", help="shots JSON; pool one row per shot")
    p.add_argument("--out", required=True, help="output embedding store")
    p.set_defaults(func=cmd_mfcc)

    p = sub.add_parser("align", help="assemble per-shot features for one video")
    p.add_argument("--manifest", required=True)
    p.add_argument("--norm", help="normalizer store (2 x dim: mean, std)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("train", help="train a fusion model on a corpus")
    p.add_argument("--data", required=True, help="corpus directory (corpus.json)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--history", help="also write per-epoch history JSON here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="chapter one video with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--tau", type=float, help="override the stored threshold")
    p.add_argument("--out", required=True, help="predicted chapters CSV")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("baseline", help="non-neural baselines")
    p.add_argument("mode", choices=["zero-shot", "anchor"])
    p.add_argument("--manifest", required=True)
    p.add_argument("--tau", type=float, help="zero-shot threshold")
    p.add_argument("--norm", help="zero-shot normalizer store")
    p.add_argument("--k", type=int, default=9, help="anchor cluster count")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("eval", help="score predicted chapters against annotation")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--duration", type=float, required=True)
    p.add_argument("--table", action="store_true", help="aligned text table instead of JSON")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep-tau", help="pick the threshold maximizing F1@IoU0.5")
    p.add_argument("--data", required=True)
    p.add_argument("--model", help="checkpoint; omit to sweep the zero-shot features")
    p.add_argument("--split", choices=["train", "val", "test"], default="val")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep_tau)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    try:
        return args.func(args)
    except (ConfigError, ManifestError, StoreFormatError, OSError, ValueError, KeyError) as exc:
        _log(f"error: {exc}")
        return 1
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, never crashes
        _log(f"error: {type(exc).__name__}: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
