"""Frame color descriptors and windowed shot boundary detection.

A frame is summarized by mean hue, saturation and value. The detector compares
each frame against the mean descriptor of the trailing window; a slow fade
accumulates against that mean even when frame-to-frame steps stay tiny, which
is the point of comparing to a window rather than the previous frame.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .timeline import Shot, TimeInterval

DEFAULT_WINDOW = 10
DEFAULT_THRESHOLD = 0.15
DEFAULT_MIN_SHOT = 15


@dataclass(frozen=True)
class FrameDescriptor:
    hue: float  # degrees in [0, 360)
    saturation: float  # [0, 1]
    value: float  # [0, 1]
    frame_index: int = 0


def rgb_to_hsv(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized RGB [0,1] -> (hue degrees, saturation, value) per pixel."""
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = rgb.max(axis=-1)
    c = v - rgb.min(axis=-1)
    s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)
    hue = np.zeros_like(v)
    nz = c > 0
    rmax = nz & (v == r)
    gmax = nz & (v == g) & ~rmax
    bmax = nz & ~rmax & ~gmax
    with np.errstate(invalid="ignore", divide="ignore"):
        hue[rmax] = (60.0 * (g[rmax] - b[rmax]) / c[rmax]) % 360.0
        hue[gmax] = 60.0 * (b[gmax] - r[gmax]) / c[gmax] + 120.0
        hue[bmax] = 60.0 * (r[bmax] - g[bmax]) / c[bmax] + 240.0
    return hue, s, v


def circular_mean_deg(degrees: np.ndarray) -> float:
    """Mean angle via unit-vector averaging; 0.0 when the resultant vanishes."""
    radians = np.deg2rad(np.asarray(degrees, dtype=np.float64))
    x, y = np.cos(radians).mean(), np.sin(radians).mean()
    if np.hypot(x, y) < 1e-12:
        return 0.0
    return float(np.rad2deg(np.arctan2(y, x)) % 360.0)


def frame_descriptor(rgb: np.ndarray, frame_index: int = 0) -> FrameDescriptor:
    """Per-channel means after HSV conversion.

    The hue mean is circular (unit-vector average over pixels); achromatic
    pixels carry hue 0 by convention.
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.shape[0] == 0 or rgb.shape[1] == 0:
        raise ValueError(f"expected a non-empty HxWx3 frame, got shape {rgb.shape}")
    hue, s, v = rgb_to_hsv(rgb)
    return FrameDescriptor(circular_mean_deg(hue.ravel()), float(s.mean()), float(v.mean()), frame_index)


def hue_difference_deg(a: float, b: float) -> float:
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


def descriptor_distance(a: FrameDescriptor, b: FrameDescriptor) -> float:
    """Equal-weight L1 over (circular hue / 180, saturation, value), in [0, 1]."""
    return (hue_difference_deg(a.hue, b.hue) / 180.0 + abs(a.saturation - b.saturation) + abs(a.value - b.value)) / 3.0


def _window_mean(descriptors: list[FrameDescriptor], lo: int, hi: int) -> FrameDescriptor:
    hues = np.array([d.hue for d in descriptors[lo:hi]])
    sats = np.array([d.saturation for d in descriptors[lo:hi]])
    vals = np.array([d.value for d in descriptors[lo:hi]])
    return FrameDescriptor(circular_mean_deg(hues), float(sats.mean()), float(vals.mean()))


def detect_shots(
    descriptors: list[FrameDescriptor],
    fps: float,
    window: int = DEFAULT_WINDOW,
    threshold: float = DEFAULT_THRESHOLD,
    min_shot: int = DEFAULT_MIN_SHOT,
) -> list[Shot]:
    """Cut the frame stream into contiguous shots.

    A boundary lands at frame t when the descriptor distance between frame t
    and the mean descriptor of frames [t-window, t) exceeds `threshold` and the
    previous boundary is at least `min_shot` frames back. Shots cover all
    frames; only the final shot may be shorter than min_shot.
    """
    if window <= 0:
        raise ValueError(f"window must be positive, got {window}")
    if fps <= 0:
        raise ValueError(f"fps must be positive, got {fps}")
    n = len(descriptors)
    if n < window + 1:
        raise ValueError(f"need at least window+1 frames, got {n} for window {window}")

    boundaries = [0]
    for t in range(window, n):
        if t - boundaries[-1] < min_shot:
            continue
        if descriptor_distance(descriptors[t], _window_mean(descriptors, t - window, t)) > threshold:
            boundaries.append(t)
    edges = boundaries + [n]
    return [
        Shot(i, TimeInterval(edges[i] / fps, edges[i + 1] / fps))
        for i in range(len(edges) - 1)
    ]


DESCRIPTOR_CSV_HEADER = ["frame_index", "hue", "saturation", "value"]


def read_descriptor_csv(path) -> list[FrameDescriptor]:
    """CSV `frame_index,hue,saturation,value` with consecutive 0-based indices."""
    descriptors = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != DESCRIPTOR_CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(DESCRIPTOR_CSV_HEADER)}, got {header}")
        for line, row in enumerate(reader, start=2):
            try:
                idx = int(row[0])
                hue, sat, val = (float(x) for x in row[1:4])
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{line}: malformed descriptor row {row}") from exc
            if idx != len(descriptors):
                raise ValueError(f"{path}:{line}: frame_index {idx} out of order, expected {len(descriptors)}")
            descriptors.append(FrameDescriptor(hue, sat, val, idx))
    return descriptors


def write_descriptor_csv(path, descriptors: list[FrameDescriptor]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(DESCRIPTOR_CSV_HEADER)
        for d in descriptors:
            writer.writerow([d.frame_index, repr(d.hue), repr(d.saturation), repr(d.value)])
