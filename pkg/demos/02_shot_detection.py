"""Windowed shot detection on a synthetic descriptor stream.

The stream has one hard cut and one 8-frame fade. Comparing each frame to the
mean of a 10-frame trailing window catches both; a single-frame comparison at
the same threshold misses the fade because no individual step is large.
"""

from newsreel.video import FrameDescriptor, detect_shots

frames = []
# plateau A, hard cut at 80, plateau B, 8-frame fade starting at 160, plateau C
for i in range(80):
    frames.append(FrameDescriptor(10.0, 0.8, 0.3, i))
for i in range(80, 160):
    frames.append(FrameDescriptor(140.0, 0.6, 0.7, i))
for j in range(1, 9):
    v = 0.7 + (0.2 - 0.7) * j / 9.0
    frames.append(FrameDescriptor(140.0, 0.6, v, 159 + j))
for i in range(168, 260):
    frames.append(FrameDescriptor(140.0, 0.6, 0.2, i))

for window in (10, 1):
    shots = detect_shots(frames, fps=25.0, window=window, threshold=0.05)
    cuts = [round(s.interval.start * 25) for s in shots[1:]]
    print(f"window={window:2d}: {len(shots)} shots, boundaries at frames {cuts}")

print("\nthe hard cut at frame 80 is visible to both; only the windowed")
print("comparison accumulates the fade that ends near frame 168")
