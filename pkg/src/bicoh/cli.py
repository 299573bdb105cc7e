"""
Command-line entry point.

Subcommands::

    bicoh simulate --config scenario.cfg [--seed S]
    bicoh analyze  signal.csv [--segment-length 512 --overlap 0.5 --window hann]
    bicoh filter   signal.csv [--alpha 0.997 --realizations 2000 --seed S --jobs J]
    bicoh report   OUT_DIR
    bicoh verify   OUT_DIR

Exit codes: 0 success, 1 I/O error, 2 validation error. The default output
directory is ``$BICOH_OUT_DIR`` or ``./bicoh-out``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import __version__
from .bispectrum import bicoherence
from .config import ConfigError, load_config, build_signal
from .io import (
    SignalFileError,
    plot_bicoherence,
    plot_mask,
    plot_spectrogram,
    read_mask_csv,
    read_signal,
    sha256_file,
    verify_manifest,
    write_bicoherence_csv,
    write_manifest,
    write_mask_csv,
    write_signal_bin,
    write_signal_csv,
    write_spectrogram_csv,
)
from .signal_model import UnstableSimulationError
from .spectral import SegmentationPlan, segment_spectra, spectrogram
from .surrogate import Cluster, FilterMask, filter_bicoherence, survivor_clusters

EXIT_OK, EXIT_IO, EXIT_VALIDATION = 0, 1, 2
OUT_DIR_ENV = "BICOH_OUT_DIR"
FORMATS = ("csv", "bin", "png")


class ValidationError(ValueError):
    pass


def _formats(raw: str) -> set:
    chosen = {f.strip() for f in raw.split(",") if f.strip()}
    unknown = chosen - set(FORMATS)
    if unknown:
        raise ValidationError(f"--format: unknown format(s) {sorted(unknown)}")
    return chosen


def _out_dir(args) -> Path:
    out = Path(args.out_dir or os.environ.get(OUT_DIR_ENV) or "bicoh-out")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise SignalFileError(f"cannot create output directory {out}: {exc}") from None
    return out


def _sample_rate_hint(signal_path: Path, explicit):
    if explicit is not None:
        return explicit
    if signal_path.suffix not in (".f64", ".bin"):
        return None
    manifest = signal_path.parent / "manifest_simulate.json"
    if manifest.is_file():
        return json.loads(manifest.read_text())["derived"]["sample_rate"]
    return None


def _load(args):
    path = Path(args.signal)
    signal = read_signal(path, _sample_rate_hint(path, args.sample_rate))
    try:
        plan = SegmentationPlan(
            segment_length=args.segment_length,
            overlap_fraction=args.overlap,
            window=args.window,
            sample_rate=signal.sample_rate,
        )
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    if len(signal) < plan.segment_length:
        raise ValidationError(
            f"segment length {plan.segment_length} exceeds signal length {len(signal)}"
        )
    return signal, plan


def _plan_summary(plan: SegmentationPlan, n_segments: int) -> dict:
    d = plan.to_dict()
    d["segment_count"] = n_segments
    return d


def cmd_simulate(args) -> int:
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        raise SignalFileError(f"cannot read config: {exc}") from None
    formats = _formats(args.format)
    out = _out_dir(args)
    signal, info = build_signal(cfg, seed=args.seed)
    outputs = []
    if "csv" in formats:
        write_signal_csv(out / "signal.csv", signal)
        outputs.append("signal.csv")
    if "bin" in formats:
        write_signal_bin(out / "signal.f64", signal)
        outputs.append("signal.f64")
    derived = {
        "sample_rate": signal.sample_rate,
        "n_samples": len(signal),
        "nonlinearity": info["nonlinearity"],
    }
    write_manifest(
        out / "manifest_simulate.json", "simulate",
        {"config": cfg.to_dict(), "seed": info["seed"]}, derived, outputs, __version__,
    )
    print(f"samples: {len(signal)}  sample_rate: {signal.sample_rate:g} Hz  "
          f"E: {info['nonlinearity']:.6g}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    formats = _formats(args.format)
    signal, plan = _load(args)
    out = _out_dir(args)
    spectra = segment_spectra(signal, plan)
    result = bicoherence(spectra)
    spec = spectrogram(signal, plan)
    outputs = []
    if "csv" in formats:
        write_bicoherence_csv(out / "bicoherence.csv", result)
        write_spectrogram_csv(out / "spectrogram.csv", spec)
        outputs += ["bicoherence.csv", "spectrogram.csv"]
    if "png" in formats:
        plot_bicoherence(out / "bicoherence.png", result)
        plot_spectrogram(out / "spectrogram.png", spec)
        outputs += ["bicoherence.png", "spectrogram.png"]
    derived = _plan_summary(plan, spectra.segment_count)
    write_manifest(
        out / "manifest_analyze.json", "analyze",
        {"signal": str(args.signal), "signal_sha256": sha256_file(args.signal)},
        derived, outputs, __version__,
    )
    print(f"N = {spectra.segment_count}  delta_f = {plan.delta_f:g} Hz  "
          f"nyquist = {plan.nyquist:g} Hz  n = {plan.n}")
    return EXIT_OK


def cluster_report(mask: FilterMask, clusters: list[Cluster]) -> str:
    lines = [
        f"alpha: {mask.alpha:g}",
        f"realizations: {mask.realizations}",
        f"tested cells: {int(mask.tested.sum())}",
        f"survivors: {mask.survivor_count}",
        f"expected false positives: {mask.expected_false_positives:.2f}",
    ]
    if clusters:
        big = clusters[0]
        lines.append(
            f"largest cluster: {big.size} cells, centroid "
            f"({big.centroid_f1:.2f}, {big.centroid_f2:.2f}) Hz"
        )
    else:
        lines.append("largest cluster: none")
    for c in clusters:
        lines.append(f"  cluster size={c.size} centroid=({c.centroid_f1:.2f}, {c.centroid_f2:.2f}) Hz")
    return "\n".join(lines) + "\n"


def cmd_filter(args) -> int:
    if not 0 < args.alpha < 1:
        raise ValidationError(f"--alpha must be in (0, 1), got {args.alpha}")
    if args.realizations < 100:
        raise ValidationError("--realizations must be >= 100")
    if args.jobs < 1:
        raise ValidationError("--jobs must be >= 1")
    formats = _formats(args.format)
    signal, plan = _load(args)
    out = _out_dir(args)
    spectra = segment_spectra(signal, plan)
    result = bicoherence(spectra)
    if args.full_region:
        cells = None
    else:
        max_freq = args.max_freq if args.max_freq is not None else plan.nyquist / 4
        cells = result.region.within(int(np.floor(max_freq / plan.delta_f + 1e-9)))
    mask = filter_bicoherence(
        result, spectra, alpha=args.alpha, realizations=args.realizations,
        seed=args.seed, cells=cells, jobs=args.jobs,
    )
    clusters = survivor_clusters(mask)
    report = cluster_report(mask, clusters)
    (out / "filter_report.txt").write_text(report)
    outputs = ["filter_report.txt"]
    if "csv" in formats:
        write_mask_csv(out / "mask.csv", mask)
        outputs.append("mask.csv")
    if "png" in formats:
        plot_mask(out / "mask.png", mask)
        outputs.append("mask.png")
    derived = _plan_summary(plan, spectra.segment_count)
    derived.update(expected_false_positives=mask.expected_false_positives,
                   survivors=mask.survivor_count)
    write_manifest(
        out / "manifest_filter.json", "filter",
        {"signal": str(args.signal), "signal_sha256": sha256_file(args.signal),
         "alpha": args.alpha, "realizations": args.realizations, "seed": args.seed,
         "full_region": args.full_region, "max_freq": args.max_freq},
        derived, outputs, __version__,
    )
    sys.stdout.write(report)
    return EXIT_OK


def cmd_report(args) -> int:
    out = Path(args.dir)
    manifest_path = out / "manifest_filter.json"
    if not manifest_path.is_file():
        raise SignalFileError(f"no filter manifest in {out}")
    manifest = json.loads(manifest_path.read_text())
    cols = read_mask_csv(out / "mask.csv")
    significant = cols["significant"].astype(bool)
    delta_f = manifest["derived"]["delta_f"]
    alpha = manifest["inputs"]["alpha"]
    k1 = np.rint(cols["f1_Hz"] / delta_f).astype(int)
    k2 = np.rint(cols["f2_Hz"] / delta_f).astype(int)
    n = manifest["derived"]["n"]
    dense = np.zeros((n, n), bool)
    dense[k1[significant] - 1, k2[significant] - 1] = True
    labels, count = ndimage.label(dense, structure=np.ones((3, 3)))
    sizes = []
    for lab in range(1, count + 1):
        r, c = np.nonzero(labels == lab)
        sizes.append((r.size, (r + 1).mean() * delta_f, (c + 1).mean() * delta_f))
    sizes.sort(key=lambda s: (-s[0], s[1], s[2]))
    print(f"alpha: {alpha:g}")
    print(f"tested cells: {significant.size}")
    print(f"survivors: {int(significant.sum())}")
    print(f"expected false positives: {significant.size * (1 - alpha):.2f}")
    for size, f1, f2 in sizes:
        print(f"  cluster size={size} centroid=({f1:.2f}, {f2:.2f}) Hz")
    return EXIT_OK


def cmd_verify(args) -> int:
    out = Path(args.dir)
    manifests = sorted(out.glob("manifest_*.json"))
    if not manifests:
        raise SignalFileError(f"no manifests in {out}")
    failed = False
    for m in manifests:
        bad = verify_manifest(m)
        status = "ok" if not bad else "MISMATCH " + ", ".join(bad)
        print(f"{m.name}: {status}")
        failed |= bool(bad)
    return EXIT_IO if failed else EXIT_OK


def _add_common(p, plan=True):
    p.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or ./bicoh-out)")
    if plan:
        p.add_argument("signal", help="signal CSV (time_s,value) or .f64 sidecar")
        p.add_argument("--segment-length", type=int, default=512)
        p.add_argument("--overlap", type=float, default=0.5)
        p.add_argument("--window", choices=("hann", "boxcar"), default="hann")
        p.add_argument("--sample-rate", type=float, help="required for .f64 input without a manifest")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bicoh", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"bicoh {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate the oscillator test signal")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--format", default="csv,bin")
    _add_common(p, plan=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="bicoherence and spectrogram of a signal")
    _add_common(p)
    p.add_argument("--format", default="csv,png")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("filter", help="surrogate significance filtering")
    _add_common(p)
    p.add_argument("--alpha", type=float, default=0.997)
    p.add_argument("--realizations", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--max-freq", type=float,
                   help="test cells with f1 <= this (Hz); default Nyquist / 4")
    p.add_argument("--full-region", action="store_true", help="test the whole region P")
    p.add_argument("--format", default="csv,png")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("report", help="summarize the mask written by filter")
    p.add_argument("dir")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("verify", help="check output hashes against the manifests")
    p.add_argument("dir")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: invalid configuration key {exc.key!r}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValidationError, UnstableSimulationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SignalFileError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
