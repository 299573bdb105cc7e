"""
Bispectrum and bicoherence over the principal region of the frequency-frequency
plane.

The production path uses the cross-frequency / shifted-conjugate matrix form:
per segment, ``C = X (x) X`` and ``S[k, l] = conj(X[k + l])`` on the triangle
``k <= l, k + l <= n``; then ``B = E(C o S)`` and
``b2 = |B|**2 / (E|C|**2 o E|S|**2)``.

Results are stored packed over region P, the cells ``(k1, k2)`` with
``1 <= k2 <= k1`` and ``k1 + k2 <= n`` (f1 >= f2, f1 + f2 <= Nyquist).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Optional

import numpy as np

from .spectral import SegmentationPlan, SegmentSpectra

__all__ = [
    "PrincipalRegion",
    "BicoherenceResult",
    "principal_region",
    "build_matrices",
    "bicoherence",
    "bicoherence_naive",
    "full_plane_bispectrum",
    "fold_point",
    "fold_to_principal",
    "unfold_from_principal",
    "FULL_PLANE_MAX_N",
]

FULL_PLANE_MAX_N = 64


@dataclass(frozen=True, eq=False)
class PrincipalRegion:
    """
    Packed index map of region P for ``n`` positive-frequency bins.

    ``k1[c]``, ``k2[c]`` are the 1-based bins of packed cell ``c``;
    ``index[k1 - 1, k2 - 1]`` maps back (``-1`` outside P).
    """

    n: int
    k1: np.ndarray
    k2: np.ndarray
    index: np.ndarray

    @property
    def size(self) -> int:
        return self.k1.size

    def within(self, max_bin: int) -> np.ndarray:
        """Boolean mask of cells with ``k1 <= max_bin`` (hence also ``k2``)."""
        return self.k1 <= max_bin

    def to_dense(self, values, fill=np.nan) -> np.ndarray:
        """Scatter packed values into an ``n x n`` matrix indexed ``[k1-1, k2-1]``."""
        values = np.asarray(values)
        out = np.full((self.n, self.n), fill, dtype=np.result_type(values, type(fill)))
        out[self.k1 - 1, self.k2 - 1] = values
        return out


@lru_cache(maxsize=32)
def principal_region(n: int) -> PrincipalRegion:
    k1, k2 = [], []
    for a in range(1, n):
        for b in range(1, min(a, n - a) + 1):
            k1.append(a)
            k2.append(b)
    k1 = np.asarray(k1, dtype=np.intp)
    k2 = np.asarray(k2, dtype=np.intp)
    index = np.full((n, n), -1, dtype=np.intp)
    index[k1 - 1, k2 - 1] = np.arange(k1.size)
    for arr in (k1, k2, index):
        arr.setflags(write=False)
    return PrincipalRegion(n, k1, k2, index)


@dataclass(frozen=True, eq=False)
class BicoherenceResult:
    """
    Packed bispectral estimates over region P.

    Undefined cells (a zero denominator) have ``defined == False`` and NaN
    bicoherence.
    """

    bispectrum: np.ndarray
    bicoherence_sq: np.ndarray
    denom_cross: np.ndarray
    denom_sum: np.ndarray
    defined: np.ndarray
    region: PrincipalRegion
    plan: SegmentationPlan
    segment_count: int

    @property
    def bicoherence(self) -> np.ndarray:
        """Bicoherence on the ``b`` (not squared) scale."""
        return np.sqrt(self.bicoherence_sq)

    @property
    def f1(self) -> np.ndarray:
        return self.region.k1 * self.plan.delta_f

    @property
    def f2(self) -> np.ndarray:
        return self.region.k2 * self.plan.delta_f

    def dense(self, name: str = "bicoherence_sq") -> np.ndarray:
        return self.region.to_dense(getattr(self, name))


def _shift_index(n: int):
    k = np.arange(1, n + 1)[:, None]
    l = np.arange(1, n + 1)[None, :]
    mask = (k <= l) & (k + l <= n)
    # 0-based column of X_{k+l}; clipped where masked out.
    idx = np.where(mask, k + l - 1, 0)
    return idx, mask


def _matrix_batches(x: np.ndarray, batch_size: int):
    n = x.shape[1]
    idx, mask = _shift_index(n)
    for start in range(0, x.shape[0], batch_size):
        xb = x[start:start + batch_size]
        c = xb[:, :, None] * xb[:, None, :]
        s = np.where(mask, np.conj(xb[:, idx]), 0)
        yield c, s


def build_matrices(spectra: SegmentSpectra) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """
    Yield the cross-frequency matrix ``C`` and shifted conjugate matrix ``S``
    of each segment, one segment at a time.

    Matrices are indexed ``[k - 1, l - 1]`` for bins ``k, l = 1..n``.
    """
    for c, s in _matrix_batches(spectra.spectra, 1):
        yield c[0], s[0]


def _finish(spectra, bsum, csum, ssum) -> BicoherenceResult:
    n_seg = spectra.segment_count
    region = principal_region(spectra.n)
    # Region P stores (k1 >= k2); the matrices hold the cell at [k2-1, k1-1].
    rows, cols = region.k2 - 1, region.k1 - 1
    bispec = bsum[rows, cols] / n_seg
    dc = csum[rows, cols] / n_seg
    ds = ssum[rows, cols] / n_seg
    return _result(spectra, region, bispec, dc, ds)


def _result(spectra, region, bispec, dc, ds) -> BicoherenceResult:
    denom = dc * ds
    defined = denom > 0
    b2 = np.full(region.size, np.nan)
    b2[defined] = np.minimum(np.abs(bispec[defined]) ** 2 / denom[defined], 1.0)
    return BicoherenceResult(
        bispectrum=bispec,
        bicoherence_sq=b2,
        denom_cross=dc,
        denom_sum=ds,
        defined=defined,
        region=region,
        plan=spectra.plan,
        segment_count=spectra.segment_count,
    )


def _check_segments(spectra: SegmentSpectra):
    if spectra.segment_count < 2:
        raise ValueError(
            f"bicoherence needs at least 2 segments, got {spectra.segment_count}"
        )


def bicoherence(spectra: SegmentSpectra, batch_size: int = 16) -> BicoherenceResult:
    """
    Matrix-form bispectrum and squared bicoherence.

    Segments are streamed in batches of ``batch_size`` so at most that many
    ``n x n`` matrices are alive at once.
    """
    _check_segments(spectra)
    n = spectra.n
    bsum = np.zeros((n, n), dtype=np.complex128)
    csum = np.zeros((n, n))
    ssum = np.zeros((n, n))
    for c, s in _matrix_batches(spectra.spectra, batch_size):
        bsum += np.sum(c * s, axis=0)
        csum += np.sum(c.real**2 + c.imag**2, axis=0)
        ssum += np.sum(s.real**2 + s.imag**2, axis=0)
    return _finish(spectra, bsum, csum, ssum)


def bicoherence_naive(spectra: SegmentSpectra) -> BicoherenceResult:
    """Direct triple-indexed evaluation of the bispectrum and bicoherence."""
    _check_segments(spectra)
    x = spectra.spectra
    n_seg = spectra.segment_count
    region = principal_region(spectra.n)
    bispec = np.zeros(region.size, dtype=np.complex128)
    dc = np.zeros(region.size)
    ds = np.zeros(region.size)
    for c in range(region.size):
        k, l = int(region.k1[c]), int(region.k2[c])
        acc, acc_c, acc_s = 0j, 0.0, 0.0
        for i in range(n_seg):
            xk, xl, xkl = x[i, k - 1], x[i, l - 1], x[i, k + l - 1]
            acc += xk * xl * xkl.conjugate()
            acc_c += abs(xk * xl) ** 2
            acc_s += abs(xkl) ** 2
        bispec[c] = acc / n_seg
        dc[c] = acc_c / n_seg
        ds[c] = acc_s / n_seg
    return _result(spectra, region, bispec, dc, ds)


def full_plane_bispectrum(full_dft) -> np.ndarray:
    """
    Bispectrum on the whole signed frequency plane, for validating symmetries.

    Parameters
    ----------
    full_dft : numpy.ndarray
        Two-sided per-segment DFTs in numpy FFT order. Shape: [N, 2n]

    Returns
    -------
    numpy.ndarray
        ``out[k1 + n, k2 + n] = B(k1, k2)`` for ``k1, k2 = -n..n``; NaN outside
        the Nyquist hexagon ``|k1 + k2| <= n``. Shape: [2n + 1, 2n + 1]
    """
    full_dft = np.asarray(full_dft, dtype=np.complex128)
    if full_dft.ndim != 2 or full_dft.shape[1] % 2:
        raise ValueError("full_dft must have shape [N, 2n]")
    length = full_dft.shape[1]
    n = length // 2
    if n > FULL_PLANE_MAX_N:
        raise ValueError(
            f"full-plane bispectrum is a validation tool limited to n <= "
            f"{FULL_PLANE_MAX_N}, got n = {n}"
        )
    k = np.arange(-n, n + 1)
    k1, k2 = k[:, None], k[None, :]
    inside = np.abs(k1 + k2) <= n
    x1 = full_dft[:, k1 % length]
    x2 = full_dft[:, k2 % length]
    x3 = full_dft[:, (k1 + k2) % length]
    b = np.mean(x1 * x2 * np.conj(x3), axis=0)
    return np.where(inside, b, np.nan + 0j)


def fold_point(k1: int, k2: int, n: int) -> Optional[tuple[int, int, bool]]:
    """
    Map a hexagon point onto its region-P representative.

    For a real signal ``B(a, b) = E(X_a X_b X_c)`` with ``c = -a - b`` is
    symmetric in the triple ``(a, b, c)``, and negating the triple conjugates
    it. Returns ``(p, q, conjugate)`` with ``B(k1, k2) = B(p, q)`` (or its
    conjugate), or ``None`` on the axes where a zero frequency is involved.
    """
    triple = (k1, k2, -k1 - k2)
    if 0 in triple:
        return None
    if max(abs(v) for v in triple) > n:
        raise ValueError(f"({k1}, {k2}) lies outside the Nyquist hexagon for n={n}")
    positive = [v for v in triple if v > 0]
    conjugate = len(positive) == 1
    if conjugate:
        positive = [-v for v in triple if v < 0]
    p, q = sorted(positive, reverse=True)
    return p, q, conjugate


def fold_to_principal(full_plane) -> np.ndarray:
    """Packed region-P values read off a full-plane matrix."""
    full_plane = np.asarray(full_plane)
    n = (full_plane.shape[0] - 1) // 2
    region = principal_region(n)
    return full_plane[region.k1 + n, region.k2 + n]


def unfold_from_principal(packed, n: int) -> np.ndarray:
    """
    Rebuild the full signed plane from region-P values via :func:`fold_point`.

    Axis points (involving a zero frequency) and points outside the hexagon
    are NaN.
    """
    region = principal_region(n)
    packed = np.asarray(packed)
    out = np.full((2 * n + 1, 2 * n + 1), np.nan + 0j)
    for a in range(-n, n + 1):
        for b in range(-n, n + 1):
            if abs(a + b) > n:
                continue
            folded = fold_point(a, b, n)
            if folded is None:
                continue
            p, q, conjugate = folded
            value = packed[region.index[p - 1, q - 1]]
            out[a + n, b + n] = np.conj(value) if conjugate else value
    return out
