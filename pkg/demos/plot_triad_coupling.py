"""
Phase coupling versus independent phases
========================================

Three spectral lines at bins 5, 3 and 8 are drawn with random phases in
each segment. When the third phase is the sum of the other two the
bicoherence at (5, 3) is one; with an independent third phase it falls to
roughly 1/N.
"""
import numpy as np

from bicoh import SegmentationPlan, SignalRecord, bicoherence, segment_spectra

rng = np.random.default_rng(0)
length, n_seg = 64, 64
t = np.arange(length) / length


def triad(coupled):
    blocks = []
    for _ in range(n_seg):
        p1, p2, p3 = rng.uniform(0, 2 * np.pi, 3)
        if coupled:
            p3 = p1 + p2
        blocks.append(np.cos(2 * np.pi * 5 * t + p1) + np.cos(2 * np.pi * 3 * t + p2)
                      + np.cos(2 * np.pi * 8 * t + p3) + 0.01 * rng.standard_normal(length))
    return SignalRecord(np.concatenate(blocks), float(length))


# %%
# One segment per block, rectangular window, so bin k sits at k Hz.
plan = SegmentationPlan(length, 0.0, "boxcar", float(length))

for coupled in (True, False):
    res = bicoherence(segment_spectra(triad(coupled), plan))
    cell = res.region.index[5 - 1, 3 - 1]
    print(f"coupled={coupled!s:5}  b^2(5, 3) = {res.bicoherence_sq[cell]:.4f}")
