from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from bicoh.bispectrum import bicoherence
from bicoh.signal_model import (
    BurstSpec,
    NoiseSpec,
    OscillatorParams,
    SignalRecord,
    compose_test_signal,
    simulate_oscillator,
    white_noise,
)
from bicoh.spectral import SegmentationPlan, SegmentSpectra, segment_spectra
from bicoh.surrogate import (
    SurrogateDistribution,
    cell_rng,
    critical_value,
    filter_bicoherence,
    histogram,
    order_statistic_rank,
    random_bicoherence,
    surrogate_distribution,
)


def noise_spectra(seed, length=64 * 60, segment=64, overlap=0.0, window="hann"):
    sig = white_noise(length, 1.0, seed=seed)
    return segment_spectra(sig, SegmentationPlan(segment, overlap, window, 1.0))


def test_order_statistic_example():
    samples = np.arange(1, 11) / 10.0
    pad = np.repeat(samples, 10)  # R = 100, same quantile structure
    dist = SurrogateDistribution(pad**2, (1, 1))
    assert critical_value(dist, 0.9) == pytest.approx(0.9)
    assert order_statistic_rank(0.9, 10) == 9


def test_order_statistic_rank_bounds():
    assert order_statistic_rank(0.997, 2000) == 1994
    assert order_statistic_rank(1e-9, 100) == 1
    with pytest.raises(ValueError):
        order_statistic_rank(1.0, 100)
    with pytest.raises(ValueError):
        order_statistic_rank(0.0, 100)


def test_critical_value_monotone_in_alpha():
    dist = surrogate_distribution(noise_spectra(0), (5, 3), realizations=1000, seed=1)
    alphas = [0.01, 0.1, 0.5, 0.9, 0.99, 0.997]
    values = [critical_value(dist, a) for a in alphas]
    assert np.all(np.diff(values) >= 0)
    assert values[0] <= np.median(dist.b)


def test_rayleigh_approximation():
    # Constant amplitudes make N * b^2 approximately Exp(1).
    n_seg, alpha = 50, 0.997
    ones = np.ones(n_seg)
    samples = random_bicoherence(ones, ones, ones, 200_000, np.random.default_rng(0))
    dist = SurrogateDistribution(samples, (1, 1))
    expected = np.sqrt(-np.log(1 - alpha) / n_seg)
    assert critical_value(dist, alpha) == pytest.approx(expected, rel=0.1)


def test_too_few_realizations():
    with pytest.raises(ValueError, match="realizations"):
        surrogate_distribution(noise_spectra(0), (2, 1), realizations=99)


def test_undefined_cell_rejected():
    x = np.ones((4, 8), dtype=complex)
    x[:, 2] = 0  # bin 3 = 2 + 1
    spectra = SegmentSpectra(x, SegmentationPlan(16, 0.0, "boxcar", 1.0))
    with pytest.raises(ValueError, match="undefined"):
        surrogate_distribution(spectra, (2, 1), realizations=100)


def test_cell_outside_region_rejected():
    with pytest.raises(ValueError, match="outside"):
        surrogate_distribution(noise_spectra(0), (20, 20), realizations=100)


def test_cell_order_is_normalized():
    spectra = noise_spectra(3)
    a = surrogate_distribution(spectra, (7, 2), realizations=200, seed=5)
    b = surrogate_distribution(spectra, (2, 7), realizations=200, seed=5)
    assert a.cell == b.cell == (7, 2)
    assert np.array_equal(a.samples, b.samples)


def test_amplitude_only_dependence():
    # Quarter-turn phases change every measured phase yet keep |X| bit-exact.
    spectra = noise_spectra(4)
    quarter = np.random.default_rng(0).integers(0, 4, spectra.spectra.shape)
    rotated = SegmentSpectra(spectra.spectra * 1j**quarter, spectra.plan)
    assert np.array_equal(rotated.amplitudes(), spectra.amplitudes())
    a = surrogate_distribution(spectra, (9, 4), realizations=300, seed=2)
    b = surrogate_distribution(rotated, (9, 4), realizations=300, seed=2)
    assert np.array_equal(a.samples, b.samples)


def test_per_cell_streams_are_independent_of_order():
    a = cell_rng(7, 5, 3).random(4)
    cell_rng(7, 1, 1).random(100)
    b = cell_rng(7, 5, 3).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, cell_rng(7, 3, 5).random(4))
    assert not np.array_equal(a, cell_rng(8, 5, 3).random(4))


def test_dominant_segment_concentrates_near_one():
    amps = np.full(20, 1e-6)
    amps[0] = 1.0
    samples = random_bicoherence(amps, amps, amps, 1000, np.random.default_rng(1))
    assert samples.min() > 0.999


def test_varying_amplitudes_raise_the_null():
    # N = 10 segments; one Uniform[0, 1] amplitude per segment shared by the
    # three components, against constant amplitudes.
    rng = np.random.default_rng(2024)
    r, n_seg = 10_000, 10
    amp = rng.uniform(0, 1, n_seg)
    varying = np.sqrt(random_bicoherence(amp, amp, amp, r, rng))
    ones = np.ones(n_seg)
    constant = np.sqrt(random_bicoherence(ones, ones, ones, r, rng))
    test = stats.ttest_ind(varying, constant, equal_var=False, alternative="greater")
    assert varying.mean() > constant.mean()
    assert test.pvalue < 1e-6


def test_histogram_counts():
    dist = surrogate_distribution(noise_spectra(1), (3, 3), realizations=500, seed=0)
    edges, counts = histogram(dist)
    assert edges.size == 101 and counts.sum() == 500
    assert edges[0] == 0.0 and edges[-1] == 1.0


@pytest.fixture(scope="module")
def noise_result():
    spectra = noise_spectra(11, length=128 * 60, segment=128)
    return spectra, bicoherence(spectra)


def test_serial_and_parallel_agree(noise_result):
    spectra, res = noise_result
    cells = res.region.k1 <= 12
    serial = filter_bicoherence(res, spectra, 0.9, 200, seed=3, cells=cells, jobs=1)
    parallel = filter_bicoherence(res, spectra, 0.9, 200, seed=3, cells=cells, jobs=3)
    assert np.array_equal(serial.critical, parallel.critical, equal_nan=True)
    assert np.array_equal(serial.significant, parallel.significant)


def test_survivors_shrink_with_alpha(noise_result):
    spectra, res = noise_result
    cells = res.region.k1 <= 20
    low = filter_bicoherence(res, spectra, 0.8, 300, seed=0, cells=cells)
    high = filter_bicoherence(res, spectra, 0.95, 300, seed=0, cells=cells)
    assert np.all(low.significant[high.significant])
    assert high.survivor_count <= low.survivor_count


@pytest.mark.parametrize("alpha", [0.5, 0.9, 0.99])
def test_null_calibration_with_independent_segments(noise_result, alpha):
    spectra, res = noise_result
    mask = filter_bicoherence(res, spectra, alpha, 500, seed=1)
    tested = int(mask.tested.sum())
    assert mask.expected_false_positives == pytest.approx(tested * (1 - alpha))
    sd = np.sqrt(tested * alpha * (1 - alpha))
    assert abs(mask.survivor_count - tested * (1 - alpha)) <= 3 * sd


def test_filter_rejects_mismatched_inputs(noise_result):
    spectra, res = noise_result
    other = noise_spectra(0, length=128 * 30, segment=128)
    with pytest.raises(ValueError, match="segmentations"):
        filter_bicoherence(res, other, 0.9, 100)
    with pytest.raises(ValueError):
        filter_bicoherence(res, spectra, 1.5, 100)
    with pytest.raises(ValueError):
        filter_bicoherence(res, spectra, 0.9, 50)


def test_undefined_cells_never_significant():
    x = np.random.default_rng(0).standard_normal((30, 16)) + 0j
    x[:, 4] = 0
    spectra = SegmentSpectra(x, SegmentationPlan(32, 0.0, "boxcar", 1.0))
    res = bicoherence(spectra)
    mask = filter_bicoherence(res, spectra, 0.5, 100)
    assert not mask.significant[~res.defined].any()
    assert not mask.tested[~res.defined].any()


def test_clusters_find_planted_block():
    x = np.random.default_rng(0).standard_normal((40, 32)) + 0j
    spectra = SegmentSpectra(x, SegmentationPlan(64, 0.0, "boxcar", 1.0))
    mask = filter_bicoherence(bicoherence(spectra), spectra, 0.999, 1000)
    region = mask.region
    block = (region.k1 >= 10) & (region.k1 <= 12) & (region.k2 >= 4) & (region.k2 <= 6)
    planted = mask.significant.copy()
    planted[:] = False
    planted[block] = True
    clusters = replace(mask, significant=planted).clusters()
    assert len(clusters) == 1
    assert clusters[0].size == 9
    assert clusters[0].centroid_f1 == pytest.approx(11 / 64)
    assert clusters[0].centroid_f2 == pytest.approx(5 / 64)


def test_nonstationary_bias():
    # Bursts raise the unfiltered plane above a stationary control of equal power.
    osc = simulate_oscillator(OscillatorParams())
    bursty = compose_test_signal(osc, NoiseSpec(5.0), BurstSpec(), seed=0)
    extra = np.sqrt(np.mean(bursty.samples**2) - np.mean(osc.samples**2))
    control = SignalRecord(osc.samples + white_noise(len(osc), extra, seed=1).samples, osc.sample_rate)
    plan = SegmentationPlan(512, 0.5, "hann", osc.sample_rate)
    mean_bursty = np.nanmean(bicoherence(segment_spectra(bursty, plan)).bicoherence_sq)
    mean_control = np.nanmean(bicoherence(segment_spectra(control, plan)).bicoherence_sq)
    assert mean_bursty > 2 * mean_control
