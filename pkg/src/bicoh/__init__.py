"""
Bicoherence of nonstationary signals with Monte Carlo significance filtering.
"""
from .bispectrum import (
    BicoherenceResult,
    PrincipalRegion,
    bicoherence,
    bicoherence_naive,
    build_matrices,
    fold_point,
    fold_to_principal,
    full_plane_bispectrum,
    principal_region,
    unfold_from_principal,
)
from .signal_model import (
    BurstSpec,
    NoiseSpec,
    OscillatorParams,
    SignalRecord,
    UnstableSimulationError,
    burst_train,
    calibrate_nonlinearity,
    compose_test_signal,
    simulate_oscillator,
    white_noise,
)
from .spectral import (
    SegmentationPlan,
    SegmentSpectra,
    hann_window,
    segment_dft_full,
    segment_spectra,
    spectrogram,
)
from .surrogate import (
    FilterMask,
    SurrogateDistribution,
    critical_value,
    filter_bicoherence,
    histogram,
    random_bicoherence,
    surrogate_distribution,
    survivor_clusters,
)

__version__ = "0.1.0"

__all__ = [
    "BicoherenceResult",
    "PrincipalRegion",
    "bicoherence",
    "bicoherence_naive",
    "build_matrices",
    "fold_point",
    "fold_to_principal",
    "full_plane_bispectrum",
    "principal_region",
    "unfold_from_principal",
    "BurstSpec",
    "NoiseSpec",
    "OscillatorParams",
    "SignalRecord",
    "UnstableSimulationError",
    "burst_train",
    "calibrate_nonlinearity",
    "compose_test_signal",
    "simulate_oscillator",
    "white_noise",
    "SegmentationPlan",
    "SegmentSpectra",
    "hann_window",
    "segment_dft_full",
    "segment_spectra",
    "spectrogram",
    "FilterMask",
    "SurrogateDistribution",
    "critical_value",
    "filter_bicoherence",
    "histogram",
    "random_bicoherence",
    "surrogate_distribution",
    "survivor_clusters",
]
