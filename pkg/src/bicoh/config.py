"""
Plain-text ``key = value`` scenario files for the oscillator test signal.

Recognized keys (all optional, defaults reproduce the 45/150 Hz reference run)::

    mass              = 1.0          # kg
    eigen_f1          = 45           # Hz
    eigen_f2          = 150          # Hz
    nonlinearity_mode = off          # off | force_deviation:<fraction> | explicit:<E>
    duration          = 15           # s
    sample_rate       = 2000         # Hz
    noise_snr         = 5            # RMS(x1) / RMS(noise)
    burst_count       = 4
    burst_sigma       = 0.1          # s
    burst_centers     = 3, 6, 9, 12  # s; default spreads them evenly
    burst_snr         = 0.5          # RMS(x1) / RMS(burst carrier)
    seed              = 0

Lines starting with ``#`` or ``;`` are comments.
"""
from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional

from .signal_model import (
    BurstSpec,
    NoiseSpec,
    OscillatorParams,
    calibrate_nonlinearity,
    compose_test_signal,
    simulate_oscillator,
)

__all__ = ["ConfigError", "ScenarioConfig", "load_config", "parse_config", "build_signal"]


class ConfigError(ValueError):
    """Invalid scenario configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class ScenarioConfig:
    mass: float = 1.0
    eigen_f1: float = 45.0
    eigen_f2: float = 150.0
    nonlinearity_mode: str = "off"
    duration: float = 15.0
    sample_rate: float = 2000.0
    noise_snr: float = 5.0
    burst_count: int = 4
    burst_sigma: float = 0.1
    burst_centers: Optional[tuple] = None
    burst_snr: float = 0.5
    seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["burst_centers"] = list(self.centers)
        return d

    @property
    def centers(self) -> tuple:
        if self.burst_centers is not None:
            return tuple(self.burst_centers)
        k = self.burst_count
        return tuple(self.duration * (i + 1) / (k + 1) for i in range(k))

    def oscillator_params(self, nonlinearity: float = 0.0) -> OscillatorParams:
        return OscillatorParams(
            mass=self.mass,
            eigen_f1=self.eigen_f1,
            eigen_f2=self.eigen_f2,
            nonlinearity=nonlinearity,
            duration=self.duration,
            sample_rate=self.sample_rate,
        )

    def nonlinearity(self) -> float:
        """Resolve ``nonlinearity_mode`` into the coefficient E."""
        kind, _, value = self.nonlinearity_mode.partition(":")
        if kind == "off":
            return 0.0
        if kind == "explicit":
            return float(value)
        fraction = float(value)
        return calibrate_nonlinearity(self.oscillator_params(), fraction)


_FLOAT_KEYS = (
    "mass", "eigen_f1", "eigen_f2", "duration", "sample_rate",
    "noise_snr", "burst_sigma", "burst_snr",
)
_POSITIVE_KEYS = _FLOAT_KEYS


def _parse_mode(raw: str) -> str:
    raw = raw.strip().lower()
    kind, sep, value = raw.partition(":")
    if kind == "off" and not sep:
        return "off"
    if kind in ("force_deviation", "explicit") and sep:
        try:
            v = float(value)
        except ValueError:
            raise ConfigError("nonlinearity_mode", f"not a number: {value!r}") from None
        if kind == "force_deviation" and not v > 0:
            raise ConfigError("nonlinearity_mode", "force_deviation fraction must be > 0")
        return f"{kind}:{v!r}"
    raise ConfigError(
        "nonlinearity_mode",
        f"expected off, force_deviation:<fraction> or explicit:<value>, got {raw!r}",
    )


def parse_config(text: str) -> ScenarioConfig:
    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#", ";"), interpolation=None
    )
    try:
        parser.read_string("[scenario]\n" + text)
    except configparser.Error as exc:
        raise ConfigError("<syntax>", str(exc)) from None
    section = parser["scenario"]
    known = set(ScenarioConfig.__dataclass_fields__)
    values = {}
    for key, raw in section.items():
        if key not in known:
            raise ConfigError(key, "unknown configuration key")
        if key in _FLOAT_KEYS:
            try:
                values[key] = float(raw)
            except ValueError:
                raise ConfigError(key, f"not a number: {raw!r}") from None
            if key in _POSITIVE_KEYS and not values[key] > 0:
                raise ConfigError(key, f"must be positive, got {raw}")
        elif key in ("burst_count", "seed"):
            try:
                values[key] = int(raw)
            except ValueError:
                raise ConfigError(key, f"not an integer: {raw!r}") from None
            if values[key] < 0:
                raise ConfigError(key, f"must be >= 0, got {raw}")
        elif key == "burst_centers":
            try:
                values[key] = tuple(float(v) for v in raw.split(",") if v.strip())
            except ValueError:
                raise ConfigError(key, f"expected comma-separated seconds, got {raw!r}") from None
        elif key == "nonlinearity_mode":
            values[key] = _parse_mode(raw)
    cfg = ScenarioConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg: ScenarioConfig):
    if cfg.eigen_f2 <= cfg.eigen_f1:
        raise ConfigError("eigen_f2", "must exceed eigen_f1")
    if cfg.burst_centers is not None and len(cfg.burst_centers) != cfg.burst_count:
        raise ConfigError(
            "burst_centers",
            f"{len(cfg.burst_centers)} centers given for burst_count={cfg.burst_count}",
        )
    for c in cfg.centers:
        if not 0 <= c <= cfg.duration:
            raise ConfigError("burst_centers", f"center {c} s outside [0, {cfg.duration}] s")
    if cfg.eigen_f2 >= cfg.sample_rate / 2:
        raise ConfigError("eigen_f2", "must lie below the Nyquist frequency")


def load_config(path) -> ScenarioConfig:
    return parse_config(Path(path).read_text())


def build_signal(cfg: ScenarioConfig, seed: Optional[int] = None):
    """
    Simulate the scenario.

    Returns
    -------
    signal : SignalRecord
    info : dict
        The resolved nonlinearity ``E`` and the seed used.
    """
    seed = cfg.seed if seed is None else seed
    e = cfg.nonlinearity()
    osc = simulate_oscillator(cfg.oscillator_params(e))
    bursts = BurstSpec(
        count=cfg.burst_count,
        centers=cfg.centers,
        width=cfg.burst_sigma,
        multiplier_snr=cfg.burst_snr,
    )
    signal = compose_test_signal(osc, NoiseSpec(cfg.noise_snr), bursts, seed=seed)
    return replace(signal, label="scenario"), {"nonlinearity": e, "seed": seed}
