"""Cepstral features from a waveform, pooled per shot.

A 440 Hz tone concentrates its filterbank energy in the mel band whose center
is nearest 440 Hz. Pooling averages coefficient rows over the frames whose
center timestamps fall inside each shot.
"""

import numpy as np

from newsreel.audio import MfccParams, compute_mfcc, mel_energies, mel_filterbank, pool_mfcc

params = MfccParams()
t = np.arange(2 * params.sample_rate) / params.sample_rate
tone = np.sin(2 * np.pi * 440.0 * t)

weights, centers = mel_filterbank(params)
energies = mel_energies(tone, params)
band = int(energies.mean(axis=0).argmax())
print(f"{params.mel_bands} mel bands over [0, {params.sample_rate // 2}] Hz")
print(f"440 Hz tone peaks in band {band} (center {centers[band]:.1f} Hz)")

matrix = compute_mfcc(tone, params)
print(f"\ncoefficients: {matrix.coefficients.shape[0]} frames x {matrix.coefficients.shape[1]}")
print(f"frame step {matrix.timestamps[1] - matrix.timestamps[0]:.3f} s")

for start, end in ((0.0, 1.0), (1.0, 2.0)):
    row = pool_mfcc(matrix, start, end)
    print(f"shot [{start}, {end}) pooled c0..c3: {np.round(row[:4], 3)}")
print("\nidentical shots of a stationary tone pool to identical rows")
