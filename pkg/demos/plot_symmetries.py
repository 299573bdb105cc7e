"""
Bispectrum symmetries of a real signal
======================================

On the full signed frequency plane the bispectrum of a real signal repeats
itself twelve ways. Everything is determined by the principal region
``f1 >= f2 > 0, f1 + f2 <= Nyquist``; folding the plane onto it and
unfolding again reproduces every off-axis value.
"""
import numpy as np

from bicoh import SegmentationPlan, SignalRecord
from bicoh.bispectrum import fold_to_principal, full_plane_bispectrum, unfold_from_principal
from bicoh.spectral import segment_dft_full

rng = np.random.default_rng(3)
n = 16
plan = SegmentationPlan(2 * n, 0.5, "hann", 1.0)
sig = SignalRecord(rng.standard_normal(2 * n + 20 * plan.hop), 1.0)
plane = full_plane_bispectrum(segment_dft_full(sig, plan))

# %%
# Mirror across f1 = f2 and point reflection through the origin.
print("B(f1,f2) - B(f2,f1):", np.nanmax(np.abs(plane - plane.T)))
print("B(f1,f2) - B*(-f1,-f2):", np.nanmax(np.abs(plane - np.conj(plane[::-1, ::-1]))))

# %%
# Fold onto region P and rebuild the plane.
rebuilt = unfold_from_principal(fold_to_principal(plane), n)
ok = ~np.isnan(rebuilt)
print("cells rebuilt:", ok.sum(), " max error:", np.max(np.abs(rebuilt[ok] - plane[ok])))
