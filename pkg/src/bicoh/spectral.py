"""
Segmentation of a signal into windowed, overlapping blocks and the ensemble of
per-block one-sided DFTs that every bispectral estimate averages over.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .signal_model import SignalRecord

__all__ = [
    "SegmentationPlan",
    "SegmentSpectra",
    "Spectrogram",
    "hann_window",
    "segment_spectra",
    "segment_dft_full",
    "spectrogram",
]

WINDOWS = ("hann", "boxcar")


def hann_window(length: int) -> np.ndarray:
    """Periodic Hann window ``sin(pi j / length)**2`` for ``j = 0..length-1``."""
    if length < 2:
        raise ValueError("window length must be >= 2")
    return np.sin(np.pi * np.arange(length) / length) ** 2


def _window(name: str, length: int) -> np.ndarray:
    if name == "hann":
        return hann_window(length)
    if name == "boxcar":
        return np.ones(length)
    raise ValueError(f"unknown window {name!r}; expected one of {WINDOWS}")


@dataclass(frozen=True)
class SegmentationPlan:
    """
    How a signal of ``M`` samples is cut into ``N`` blocks of ``2n`` samples.

    Bin ``k`` of a block spectrum corresponds to ``k * sample_rate /
    segment_length`` Hz; ``n = segment_length / 2`` bins are kept (DC dropped,
    Nyquist kept).
    """

    segment_length: int = 512
    overlap_fraction: float = 0.5
    window: str = "hann"
    sample_rate: float = 1.0

    def __post_init__(self):
        if self.segment_length < 8 or self.segment_length % 2:
            raise ValueError(
                f"segment_length must be even and >= 8, got {self.segment_length}"
            )
        if not 0 <= self.overlap_fraction < 1:
            raise ValueError(
                f"overlap_fraction must be in [0, 1), got {self.overlap_fraction}"
            )
        if self.window not in WINDOWS:
            raise ValueError(f"unknown window {self.window!r}; expected one of {WINDOWS}")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if self.hop < 1:
            raise ValueError("overlap too large: hop would be < 1 sample")

    @property
    def n(self) -> int:
        return self.segment_length // 2

    @property
    def hop(self) -> int:
        return int(round(self.segment_length * (1 - self.overlap_fraction)))

    @property
    def delta_f(self) -> float:
        return self.sample_rate / self.segment_length

    @property
    def nyquist(self) -> float:
        return self.sample_rate / 2

    @property
    def frequencies(self) -> np.ndarray:
        """Frequencies of bins ``1..n`` in Hz."""
        return np.arange(1, self.n + 1) * self.delta_f

    def segment_count(self, signal_length: int) -> int:
        if signal_length < self.segment_length:
            return 0
        return (signal_length - self.segment_length) // self.hop + 1

    def segment_starts(self, signal_length: int) -> np.ndarray:
        return np.arange(self.segment_count(signal_length)) * self.hop

    def window_values(self) -> np.ndarray:
        return _window(self.window, self.segment_length)

    def to_dict(self) -> dict:
        return {
            "segment_length": self.segment_length,
            "overlap_fraction": self.overlap_fraction,
            "window": self.window,
            "sample_rate": self.sample_rate,
            "hop": self.hop,
            "n": self.n,
            "delta_f": self.delta_f,
            "nyquist": self.nyquist,
        }


@dataclass(frozen=True)
class SegmentSpectra:
    """
    Per-segment positive-frequency DFTs.

    ``spectra[i, k - 1]`` is bin ``k`` of segment ``i``. Shape: [N, n]
    """

    spectra: np.ndarray
    plan: SegmentationPlan
    signal_length: Optional[int] = None

    def __post_init__(self):
        spectra = np.asarray(self.spectra, dtype=np.complex128)
        if spectra.ndim != 2 or spectra.shape[1] != self.plan.n:
            raise ValueError(
                f"spectra must have shape [N, {self.plan.n}], got {spectra.shape}"
            )
        if self.signal_length is not None:
            expected = self.plan.segment_count(self.signal_length)
            if spectra.shape[0] != expected:
                raise ValueError(
                    f"{spectra.shape[0]} segments given, plan yields {expected}"
                )
        spectra.setflags(write=False)
        object.__setattr__(self, "spectra", spectra)

    @property
    def segment_count(self) -> int:
        return self.spectra.shape[0]

    @property
    def n(self) -> int:
        return self.plan.n

    @property
    def frequencies(self) -> np.ndarray:
        return self.plan.frequencies

    @property
    def segment_centers(self) -> np.ndarray:
        """Segment-center times in seconds."""
        starts = np.arange(self.segment_count) * self.plan.hop
        return (starts + self.plan.segment_length / 2) / self.plan.sample_rate

    def amplitudes(self) -> np.ndarray:
        return np.abs(self.spectra)


def _blocks(signal: SignalRecord, plan: SegmentationPlan) -> np.ndarray:
    if signal.sample_rate != plan.sample_rate:
        raise ValueError(
            f"signal sampled at {signal.sample_rate} Hz, plan expects {plan.sample_rate} Hz"
        )
    m = len(signal)
    if m < plan.segment_length:
        raise ValueError(
            f"signal of {m} samples is shorter than one segment ({plan.segment_length})"
        )
    count = plan.segment_count(m)
    blocks = sliding_window_view(signal.samples, plan.segment_length)[::plan.hop][:count]
    return blocks * plan.window_values()


def segment_dft_full(signal: SignalRecord, plan: SegmentationPlan) -> np.ndarray:
    """
    Two-sided DFT of every windowed segment, normalized by ``1 / (2n)``.

    Column ``j`` holds frequency index ``j`` modulo ``2n`` (numpy FFT order).
    Shape: [N, 2n]
    """
    return np.fft.fft(_blocks(signal, plan), axis=1) / plan.segment_length


def segment_spectra(signal: SignalRecord, plan: SegmentationPlan) -> SegmentSpectra:
    """Windowed block DFTs, keeping bins ``1..n``."""
    blocks = _blocks(signal, plan)
    x = np.fft.rfft(blocks, axis=1) / plan.segment_length
    return SegmentSpectra(x[:, 1:], plan, signal_length=len(signal))


@dataclass(frozen=True)
class Spectrogram:
    """
    Power ``|X_k|**2`` per bin and segment.

    power : Shape: [n, N] (rows are frequencies)
    """

    power: np.ndarray
    frequencies: np.ndarray
    times: np.ndarray


def spectrogram(signal: SignalRecord, plan: SegmentationPlan) -> Spectrogram:
    spectra = segment_spectra(signal, plan)
    power = np.abs(spectra.spectra.T) ** 2
    return Spectrogram(power, spectra.frequencies, spectra.segment_centers)
