"""
File formats: signal CSV and float64 sidecar, result CSVs, heatmaps and run
manifests with content hashes.

Floats in CSV files are written with ``%.17g`` so they round-trip exactly and
repeated runs produce byte-identical files.
"""
from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .bispectrum import BicoherenceResult
from .signal_model import SignalRecord
from .spectral import Spectrogram
from .surrogate import FilterMask

__all__ = [
    "SignalFileError",
    "write_signal_csv",
    "write_signal_bin",
    "read_signal",
    "write_bicoherence_csv",
    "write_spectrogram_csv",
    "write_mask_csv",
    "read_mask_csv",
    "write_histogram_csv",
    "plot_bicoherence",
    "plot_mask",
    "plot_spectrogram",
    "sha256_file",
    "write_manifest",
    "verify_manifest",
    "COLORMAP",
]

COLORMAP = "viridis"
_FMT = "%.17g"


class SignalFileError(OSError):
    """A signal or result file is missing or cannot be parsed."""


def _fmt(x) -> str:
    return _FMT % x


def write_signal_csv(path, signal: SignalRecord):
    data = np.column_stack([signal.times, signal.samples])
    np.savetxt(path, data, fmt=_FMT, delimiter=",", header="time_s,value", comments="")


def write_signal_bin(path, signal: SignalRecord):
    """Raw little-endian float64 samples, no header."""
    signal.samples.astype("<f8").tofile(path)


def read_signal(path, sample_rate: Optional[float] = None) -> SignalRecord:
    """
    Load a signal from CSV (``time_s,value``) or a raw ``.f64`` sidecar.

    The sidecar carries no timing, so ``sample_rate`` is required for it.
    """
    path = Path(path)
    if not path.is_file():
        raise SignalFileError(f"signal file not found: {path}")
    try:
        if path.suffix in (".f64", ".bin"):
            if sample_rate is None:
                raise SignalFileError(f"{path}: sample rate unknown for a raw sidecar")
            raw = path.read_bytes()
            if len(raw) % 8:
                raise SignalFileError(f"{path}: size is not a multiple of 8 bytes")
            samples = np.frombuffer(raw, dtype="<f8").astype(np.float64)
            return SignalRecord(samples, sample_rate, path.stem)
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except SignalFileError:
        raise
    except (ValueError, OSError) as exc:
        raise SignalFileError(f"{path}: {exc}") from None
    if data.shape[1] != 2 or data.shape[0] < 2:
        raise SignalFileError(f"{path}: expected at least two rows of time_s,value")
    if sample_rate is None:
        span = data[-1, 0] - data[0, 0]
        if not span > 0:
            raise SignalFileError(f"{path}: time column is not increasing")
        sample_rate = round((data.shape[0] - 1) / span, 9)
    try:
        return SignalRecord(data[:, 1], sample_rate, path.stem)
    except ValueError as exc:
        raise SignalFileError(f"{path}: {exc}") from None


def _write_rows(path, header: Iterable[str], rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_bicoherence_csv(path, result: BicoherenceResult, cells=None):
    """Rows ``f1_Hz, f2_Hz, b2, abs_B, defined`` over region P (or ``cells``)."""
    keep = np.ones(result.region.size, bool) if cells is None else np.asarray(cells, bool)
    abs_b = np.abs(result.bispectrum)
    rows = (
        (_fmt(f1), _fmt(f2), _fmt(b2), _fmt(ab), int(d))
        for f1, f2, b2, ab, d, k in zip(
            result.f1, result.f2, result.bicoherence_sq, abs_b, result.defined, keep
        )
        if k
    )
    _write_rows(path, ("f1_Hz", "f2_Hz", "b2", "abs_B", "defined"), rows)


def write_spectrogram_csv(path, spec: Spectrogram):
    """Rows are frequency bins; columns are segment-center times in seconds."""
    header = ["freq_Hz"] + [_fmt(t) for t in spec.times]
    rows = ([_fmt(f)] + [_fmt(v) for v in row] for f, row in zip(spec.frequencies, spec.power))
    _write_rows(path, header, rows)


def write_mask_csv(path, mask: FilterMask):
    """Rows ``f1_Hz, f2_Hz, b, b_critical, significant`` for every tested cell."""
    rows = (
        (_fmt(f1), _fmt(f2), _fmt(b), _fmt(bc), int(s))
        for f1, f2, b, bc, s, t in zip(
            mask.f1, mask.f2, mask.bicoherence, mask.critical, mask.significant, mask.tested
        )
        if t
    )
    _write_rows(path, ("f1_Hz", "f2_Hz", "b", "b_critical", "significant"), rows)


def read_mask_csv(path) -> dict:
    """Columns of a mask CSV as arrays keyed by header name."""
    path = Path(path)
    if not path.is_file():
        raise SignalFileError(f"mask file not found: {path}")
    try:
        data = np.genfromtxt(path, delimiter=",", names=True, ndmin=1)
    except ValueError as exc:
        raise SignalFileError(f"{path}: {exc}") from None
    return {name: np.asarray(data[name]) for name in data.dtype.names}


def write_histogram_csv(path, edges, counts):
    rows = ((_fmt(lo), _fmt(hi), int(c)) for lo, hi, c in zip(edges[:-1], edges[1:], counts))
    _write_rows(path, ("bin_left", "bin_right", "count"), rows)


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _heat(ax, dense, max_bin, delta_f, **kw):
    # dense is [k1-1, k2-1]; f1 on the horizontal axis, f2 vertical.
    sub = dense[:max_bin, :max_bin].T
    extent = (0.5 * delta_f, (max_bin + 0.5) * delta_f, 0.5 * delta_f, (max_bin + 0.5) * delta_f)
    return ax.imshow(sub, origin="lower", extent=extent, aspect="auto", **kw)


def plot_bicoherence(path, result: BicoherenceResult, max_bin: Optional[int] = None):
    """Heatmap of ``b2`` over the lower part of region P (``k1 <= max_bin``)."""
    plt = _pyplot()
    max_bin = max_bin or result.region.n // 4
    fig, ax = plt.subplots(figsize=(6, 5))
    im = _heat(ax, result.dense("bicoherence_sq"), max_bin, result.plan.delta_f,
               cmap=COLORMAP, vmin=0, vmax=1)
    fig.colorbar(im, ax=ax, label="$b^2$")
    ax.set_xlabel("$f_1$ [Hz]")
    ax.set_ylabel("$f_2$ [Hz]")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_mask(path, mask: FilterMask, max_bin: Optional[int] = None):
    """Squared bicoherence with non-significant cells blanked."""
    plt = _pyplot()
    max_bin = max_bin or mask.region.n // 4
    b2 = np.where(mask.significant, mask.bicoherence**2, np.nan)
    fig, ax = plt.subplots(figsize=(6, 5))
    im = _heat(ax, mask.region.to_dense(b2), max_bin, mask.plan.delta_f,
               cmap=COLORMAP, vmin=0, vmax=1)
    fig.colorbar(im, ax=ax, label="$b^2$ (significant)")
    ax.set_title(f"alpha = {mask.alpha:g}, {mask.survivor_count} significant")
    ax.set_xlabel("$f_1$ [Hz]")
    ax.set_ylabel("$f_2$ [Hz]")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_spectrogram(path, spec: Spectrogram):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    db = 10 * np.log10(spec.power + np.finfo(float).tiny)
    ax.pcolormesh(spec.times, spec.frequencies, db, shading="nearest", cmap=COLORMAP)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("f [Hz]")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, command: str, inputs: dict, derived: dict, outputs: list,
                   version: str) -> dict:
    """
    Record a run: configuration, derived parameters and a sha256 of every output.

    ``outputs`` holds paths relative to the manifest's directory.
    """
    base = Path(path).parent
    manifest = {
        "tool": "bicoh",
        "version": version,
        "command": command,
        "inputs": inputs,
        "derived": derived,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "outputs": [
            {"path": str(p), "sha256": sha256_file(base / p), "bytes": (base / p).stat().st_size}
            for p in outputs
        ],
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def verify_manifest(path) -> list[str]:
    """Return the outputs whose hash no longer matches (empty when all match)."""
    path = Path(path)
    try:
        manifest = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise SignalFileError(f"{path}: {exc}") from None
    bad = []
    for entry in manifest.get("outputs", []):
        target = path.parent / entry["path"]
        if not target.is_file() or sha256_file(target) != entry["sha256"]:
            bad.append(entry["path"])
    return bad
