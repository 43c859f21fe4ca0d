"""Audio features: framing, mel filterbank, cepstral coefficients, shot pooling.

The cepstral pipeline is framing -> Hann window -> magnitude spectrum ->
triangular area-normalized mel filterbank -> floored log -> orthonormal DCT-II.
The FFT size equals the frame length (no zero padding); frame timestamps are
frame centers, which is what the shot pooling aligns against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile


@dataclass(frozen=True)
class MfccParams:
    sample_rate: int = 16000
    frame_length: int = 400
    hop_length: int = 160
    mel_bands: int = 40
    num_coefficients: int = 20
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if not 1 <= self.hop_length <= self.frame_length:
            raise ValueError(f"need frame_length >= hop_length >= 1, got {self.frame_length}/{self.hop_length}")
        if not 1 <= self.num_coefficients <= self.mel_bands:
            raise ValueError(f"need num_coefficients <= mel_bands, got {self.num_coefficients}/{self.mel_bands}")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")


@dataclass
class MfccMatrix:
    coefficients: np.ndarray  # frames x num_coefficients
    timestamps: np.ndarray  # frame centers, seconds


def hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(params: MfccParams) -> tuple[np.ndarray, np.ndarray]:
    """Triangular area-normalized filters over the rfft bins.

    Returns (bands x n_bins weights, band center frequencies in Hz). Filter m
    rises from center m-1 to center m and falls to center m+1, scaled by
    2 / (width in Hz) so every filter integrates to the same area.
    """
    n_bins = params.frame_length // 2 + 1
    bin_hz = np.arange(n_bins) * params.sample_rate / params.frame_length
    edges_mel = np.linspace(hz_to_mel(0.0), hz_to_mel(params.sample_rate / 2.0), params.mel_bands + 2)
    edges_hz = mel_to_hz(edges_mel)
    weights = np.zeros((params.mel_bands, n_bins))
    for m in range(params.mel_bands):
        lo, center, hi = edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]
        up = (bin_hz - lo) / (center - lo)
        down = (hi - bin_hz) / (hi - center)
        weights[m] = np.maximum(0.0, np.minimum(up, down)) * (2.0 / (hi - lo))
    return weights, edges_hz[1:-1]


def dct_matrix(n_rows: int, n: int) -> np.ndarray:
    """First n_rows rows of the n-point orthonormal DCT-II basis.

    The full n x n matrix M satisfies M @ M.T == I.
    """
    if not 1 <= n_rows <= n:
        raise ValueError(f"need 1 <= n_rows <= n, got {n_rows}/{n}")
    j = np.arange(n)
    rows = np.arange(n_rows)[:, None]
    basis = np.sqrt(2.0 / n) * np.cos(np.pi * rows * (2 * j + 1) / (2 * n))
    basis[0] = np.sqrt(1.0 / n)
    return basis


def frame_signal(samples: np.ndarray, params: MfccParams) -> np.ndarray:
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1:
        raise ValueError(f"expected mono samples, got shape {samples.shape}")
    if not np.isfinite(samples).all():
        raise ValueError("non-finite audio samples")
    if len(samples) < params.frame_length:
        raise ValueError(f"signal of {len(samples)} samples shorter than one frame ({params.frame_length})")
    frames = np.lib.stride_tricks.sliding_window_view(samples, params.frame_length)[:: params.hop_length]
    return frames.copy()


def frame_timestamps(n_frames: int, params: MfccParams) -> np.ndarray:
    starts = np.arange(n_frames) * params.hop_length
    return (starts + params.frame_length / 2.0) / params.sample_rate


def mel_energies(samples: np.ndarray, params: MfccParams) -> np.ndarray:
    """Per-frame filterbank outputs over the magnitude spectrum (pre-log)."""
    frames = frame_signal(samples, params)
    window = np.hanning(params.frame_length)
    spectra = np.abs(np.fft.rfft(frames * window, axis=1))
    weights, _ = mel_filterbank(params)
    return spectra @ weights.T


def compute_mfcc(samples: np.ndarray, params: MfccParams | None = None) -> MfccMatrix:
    """Cepstral coefficients per frame; deterministic for identical inputs."""
    params = params or MfccParams()
    energies = mel_energies(samples, params)
    log_mel = np.log(np.maximum(energies, params.log_floor))
    basis = dct_matrix(params.num_coefficients, params.mel_bands)
    coefficients = log_mel @ basis.T
    return MfccMatrix(coefficients, frame_timestamps(len(coefficients), params))


def pool_mfcc(matrix: MfccMatrix, start: float, end: float) -> np.ndarray:
    """Mean coefficient row over frames with center timestamp in [start, end)."""
    mask = (matrix.timestamps >= start) & (matrix.timestamps < end)
    if not mask.any():
        raise ValueError(f"no audio frame inside [{start}, {end}); widen the span or mark the shot silent")
    return matrix.coefficients[mask].mean(axis=0)


def read_wav(path) -> tuple[np.ndarray, int]:
    """Mono WAV as float64 in [-1, 1]; PCM16 and float32 payloads accepted."""
    rate, samples = wavfile.read(path)
    if samples.ndim != 1:
        raise ValueError(f"{path}: expected mono audio, got {samples.ndim} channels")
    if samples.dtype == np.int16:
        samples = samples.astype(np.float64) / 32768.0
    elif samples.dtype in (np.float32, np.float64):
        samples = samples.astype(np.float64)
    else:
        raise ValueError(f"{path}: unsupported WAV sample format {samples.dtype}")
    return samples, int(rate)


def read_raw_float32(path) -> np.ndarray:
    """Raw little-endian float32 sample file (no header)."""
    return np.fromfile(path, dtype="<f4").astype(np.float64)
