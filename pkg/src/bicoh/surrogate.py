"""
Monte Carlo significance filtering of bicoherence.

For each cell ``(k1, k2)`` the measured per-segment amplitudes ``|X_k1|``,
``|X_k2|`` and ``|X_k1+k2|`` are kept and their phases replaced by independent
uniform draws. Repeating this ``R`` times gives the random-bicoherence
distribution of the cell, whose ``alpha`` quantile is the critical value
``b_c``. A measured ``b >= b_c`` is significant at confidence ``alpha``.

Seed splitting
--------------
The stream of cell ``(k1, k2)`` is
``numpy.random.SeedSequence(entropy=seed, spawn_key=(k1, k2))`` fed to the
default PCG64 generator. Cells never share state, so serial and parallel runs
give identical results.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

from .bispectrum import BicoherenceResult, PrincipalRegion
from .spectral import SegmentationPlan, SegmentSpectra

__all__ = [
    "SurrogateDistribution",
    "FilterMask",
    "Cluster",
    "cell_rng",
    "random_bicoherence",
    "surrogate_distribution",
    "critical_value",
    "order_statistic_rank",
    "histogram",
    "filter_bicoherence",
    "survivor_clusters",
    "MIN_REALIZATIONS",
]

MIN_REALIZATIONS = 100
DEFAULT_ALPHA = 0.997
DEFAULT_REALIZATIONS = 2000
# Realizations drawn per batch; bounds memory at ~chunk * N * 3 doubles.
_CHUNK = 4096


@dataclass(frozen=True)
class SurrogateDistribution:
    """Random squared-bicoherence samples of one cell."""

    samples: np.ndarray
    cell: tuple

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.size < MIN_REALIZATIONS:
            raise ValueError(
                f"need at least {MIN_REALIZATIONS} realizations, got {samples.size}"
            )
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def realizations(self) -> int:
        return self.samples.size

    @property
    def b(self) -> np.ndarray:
        return np.sqrt(self.samples)


def cell_rng(seed: int, k1: int, k2: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(k1, k2)))


def _normalize_cell(cell, n: int) -> tuple[int, int]:
    k1, k2 = sorted((int(cell[0]), int(cell[1])), reverse=True)
    if k2 < 1 or k1 + k2 > n:
        raise ValueError(f"cell {tuple(cell)} is outside the principal region (n={n})")
    return k1, k2


def random_bicoherence(a1, a2, a3, realizations: int, rng: np.random.Generator):
    """
    Squared bicoherence of ``realizations`` random-phase ensembles.

    Parameters
    ----------
    a1, a2, a3 : numpy.ndarray
        Per-segment amplitudes at ``f1``, ``f2`` and ``f1 + f2``. Shape: [N]
    realizations : int
    rng : numpy.random.Generator

    Returns
    -------
    numpy.ndarray
        Shape: [realizations]
    """
    a1, a2, a3 = (np.asarray(a, dtype=np.float64) for a in (a1, a2, a3))
    cross = a1 * a2
    denom = np.mean(cross**2) * np.mean(a3**2)
    if not denom > 0:
        raise ValueError("cell is undefined: zero amplitude in every segment")
    weight = cross * a3
    n_seg = weight.size
    out = np.empty(realizations)
    for start in range(0, realizations, _CHUNK):
        stop = min(start + _CHUNK, realizations)
        phases = rng.uniform(0.0, 2 * np.pi, size=(stop - start, n_seg, 3))
        theta = phases[..., 0] + phases[..., 1] - phases[..., 2]
        re = np.mean(weight * np.cos(theta), axis=1)
        im = np.mean(weight * np.sin(theta), axis=1)
        out[start:stop] = (re**2 + im**2) / denom
    return np.minimum(out, 1.0)


def surrogate_distribution(
    spectra: SegmentSpectra, cell, realizations: int = DEFAULT_REALIZATIONS, seed: int = 0
) -> SurrogateDistribution:
    """Random-phase bicoherence distribution of ``cell`` using measured amplitudes."""
    if realizations < MIN_REALIZATIONS:
        raise ValueError(
            f"need at least {MIN_REALIZATIONS} realizations, got {realizations}"
        )
    k1, k2 = _normalize_cell(cell, spectra.n)
    amp = spectra.amplitudes()
    samples = random_bicoherence(
        amp[:, k1 - 1], amp[:, k2 - 1], amp[:, k1 + k2 - 1],
        realizations, cell_rng(seed, k1, k2),
    )
    return SurrogateDistribution(samples, (k1, k2))


def order_statistic_rank(alpha: float, realizations: int) -> int:
    """1-based rank ``ceil(alpha * R)`` of the order statistic used as ``b_c``."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    # round() absorbs representation error such as 0.9 * 10 = 9.000000000000002
    return min(max(math.ceil(round(alpha * realizations, 9)), 1), realizations)


def _critical_from_samples(samples: np.ndarray, alpha: float) -> float:
    j = order_statistic_rank(alpha, samples.size)
    return float(np.sqrt(np.partition(samples, j - 1)[j - 1]))


def critical_value(dist: SurrogateDistribution, alpha: float = DEFAULT_ALPHA) -> float:
    """Critical bicoherence ``b_c(alpha)`` on the ``b`` scale."""
    return _critical_from_samples(dist.samples, alpha)


def histogram(dist: SurrogateDistribution, bins: int = 100):
    """Counts of the surrogate ``b`` values over ``bins`` equal bins on [0, 1]."""
    counts, edges = np.histogram(dist.b, bins=bins, range=(0.0, 1.0))
    return edges, counts


@dataclass(frozen=True, eq=False)
class FilterMask:
    """
    Significance of each packed region-P cell.

    ``critical`` is NaN for cells that were not tested (outside the requested
    cells or undefined); such cells are never significant.
    """

    significant: np.ndarray
    critical: np.ndarray
    bicoherence: np.ndarray
    tested: np.ndarray
    alpha: float
    realizations: int
    seed: int
    region: PrincipalRegion
    plan: SegmentationPlan

    @property
    def expected_false_positives(self) -> float:
        return float(self.tested.sum()) * (1 - self.alpha)

    @property
    def survivor_count(self) -> int:
        return int(self.significant.sum())

    @property
    def f1(self) -> np.ndarray:
        return self.region.k1 * self.plan.delta_f

    @property
    def f2(self) -> np.ndarray:
        return self.region.k2 * self.plan.delta_f

    def clusters(self, connectivity: int = 8) -> list["Cluster"]:
        return survivor_clusters(self, connectivity=connectivity)


@dataclass(frozen=True)
class Cluster:
    """Contiguous group of significant cells, centroid in Hz."""

    size: int
    centroid_f1: float
    centroid_f2: float
    cells: tuple = field(repr=False)


def survivor_clusters(mask: FilterMask, connectivity: int = 8) -> list[Cluster]:
    """Connected components of the survivor set, largest first."""
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    dense = mask.region.to_dense(mask.significant, fill=False).astype(bool)
    structure = np.ones((3, 3)) if connectivity == 8 else None
    labels, count = ndimage.label(dense, structure=structure)
    df = mask.plan.delta_f
    out = []
    for lab in range(1, count + 1):
        rows, cols = np.nonzero(labels == lab)
        cells = tuple(zip((rows + 1).tolist(), (cols + 1).tolist()))
        out.append(
            Cluster(len(cells), float(np.mean(rows + 1) * df), float(np.mean(cols + 1) * df), cells)
        )
    out.sort(key=lambda c: (-c.size, c.centroid_f1, c.centroid_f2))
    return out


_WORKER_AMP = None


def _init_worker(amp):
    global _WORKER_AMP
    _WORKER_AMP = amp


def _critical_batch(args):
    cells, alpha, realizations, seed = args
    return _critical_cells(_WORKER_AMP, cells, alpha, realizations, seed)


def _critical_cells(amp, cells, alpha, realizations, seed):
    out = np.empty(len(cells))
    for i, (k1, k2) in enumerate(cells):
        samples = random_bicoherence(
            amp[:, k1 - 1], amp[:, k2 - 1], amp[:, k1 + k2 - 1],
            realizations, cell_rng(seed, k1, k2),
        )
        out[i] = _critical_from_samples(samples, alpha)
    return out


def filter_bicoherence(
    result: BicoherenceResult,
    spectra: SegmentSpectra,
    alpha: float = DEFAULT_ALPHA,
    realizations: int = DEFAULT_REALIZATIONS,
    seed: int = 0,
    cells: Optional[np.ndarray] = None,
    jobs: int = 1,
) -> FilterMask:
    """
    Test every defined cell against its surrogate critical value.

    Parameters
    ----------
    result : BicoherenceResult
        Measured bicoherence of ``spectra``.
    spectra : SegmentSpectra
        Source of the per-segment amplitudes.
    alpha : float, optional
        Confidence level in (0, 1).
    realizations : int, optional
        Surrogate ensembles per cell (>= 100).
    seed : int, optional
        Master seed; see the module docstring for the per-cell split.
    cells : numpy.ndarray, optional
        Boolean mask over the packed cells restricting which are tested.
    jobs : int, optional
        Worker processes. Results do not depend on this value.
    """
    if spectra.plan != result.plan or spectra.segment_count != result.segment_count:
        raise ValueError("result and spectra come from different segmentations")
    order_statistic_rank(alpha, realizations)
    if realizations < MIN_REALIZATIONS:
        raise ValueError(
            f"need at least {MIN_REALIZATIONS} realizations, got {realizations}"
        )
    region = result.region
    tested = result.defined.copy()
    if cells is not None:
        cells = np.asarray(cells, dtype=bool)
        if cells.shape != tested.shape:
            raise ValueError("cells mask does not match the principal region")
        tested &= cells
    todo = np.flatnonzero(tested)
    pairs = list(zip(region.k1[todo].tolist(), region.k2[todo].tolist()))
    amp = spectra.amplitudes()

    if jobs > 1 and len(pairs) > 1:
        size = math.ceil(len(pairs) / (4 * jobs))
        batches = [pairs[i:i + size] for i in range(0, len(pairs), size)]
        with ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=(amp,)) as ex:
            parts = list(ex.map(_critical_batch, [(b, alpha, realizations, seed) for b in batches]))
        crit_values = np.concatenate(parts) if parts else np.empty(0)
    else:
        crit_values = _critical_cells(amp, pairs, alpha, realizations, seed)

    critical = np.full(region.size, np.nan)
    critical[todo] = crit_values
    b = result.bicoherence
    significant = np.zeros(region.size, dtype=bool)
    significant[todo] = b[todo] >= crit_values
    return FilterMask(
        significant=significant,
        critical=critical,
        bicoherence=b,
        tested=tested,
        alpha=float(alpha),
        realizations=int(realizations),
        seed=int(seed),
        region=region,
        plan=result.plan,
    )
