"""Logarithmically binned densities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientDataError


@dataclass
class Histogram:
    """Log-binned probability density.

    ``density`` integrates to one over the positive samples; ``n_zero``
    counts the non-positive samples that were set aside.
    """

    bin_edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    n_samples: int
    n_zero: int = 0
    discrete: bool = False

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    @property
    def centers(self) -> np.ndarray:
        """Geometric bin centers (of the first and last integer for discrete bins)."""
        if self.discrete:
            return np.sqrt(self.bin_edges[:-1] * (self.bin_edges[1:] - 1))
        return np.sqrt(self.bin_edges[:-1] * self.bin_edges[1:])

    @property
    def occupied(self) -> np.ndarray:
        return self.counts > 0

    def total_density(self, include_zero: bool = False) -> np.ndarray:
        """Density normalized by every sample, zeros included."""
        if not include_zero:
            return self.density
        return self.density * (self.n_samples / (self.n_samples + self.n_zero))


def log_edges(lo: float, hi: float, bins_per_decade: int) -> np.ndarray:
    """Edges lo * 10**(k/b), k = 0..K, with hi inside the last half-open bin."""
    if not (lo > 0 and hi >= lo):
        raise ValueError(f"need 0 < lo <= hi, got {lo}, {hi}")
    n_bins = int(math.floor(bins_per_decade * math.log10(hi / lo) + 1e-12)) + 1
    edges = lo * 10.0 ** (np.arange(n_bins + 1) / bins_per_decade)
    while edges[-1] <= hi:
        edges = np.append(edges, edges[-1] * 10.0 ** (1.0 / bins_per_decade))
    return edges


def integer_log_edges(lo: int, hi: int, bins_per_decade: int) -> np.ndarray:
    """Geometric edges rounded up to distinct integers; bins are [e_k, e_k+1)."""
    edges = np.unique(np.ceil(log_edges(lo, hi, bins_per_decade) - 1e-9)).astype(np.float64)
    if edges[-1] <= hi:
        edges = np.append(edges, hi + 1.0)
    return edges


def log_binned_histogram(samples, bins_per_decade: int = 10, lo: float | None = None,
                         hi: float | None = None, discrete: bool = False) -> Histogram:
    """Histogram on geometric bins.

    Without ``lo``/``hi`` the bins start at the smallest positive sample.
    Passing fixed bounds gives comparable bins across runs; samples outside
    them are dropped.  With ``discrete=True`` (integer data such as degrees)
    the edges are integers and a bin's width is the number of integers it
    holds, so narrow low bins never come out empty.
    """
    if bins_per_decade < 1:
        raise ValueError("bins_per_decade must be positive")
    s = np.asarray(samples, dtype=np.float64).ravel()
    if s.size == 0:
        raise InsufficientDataError("cannot histogram an empty sample")
    positive = s[s > 0]
    n_zero = int(s.size - positive.size)
    if positive.size == 0:
        raise InsufficientDataError("no positive samples to histogram")
    lo = positive.min() if lo is None else lo
    hi = positive.max() if hi is None else hi
    if discrete:
        edges = integer_log_edges(int(lo), int(hi), bins_per_decade)
    else:
        edges = log_edges(lo, hi, bins_per_decade)
    kept = positive[(positive >= edges[0]) & (positive < edges[-1])]
    idx = np.searchsorted(edges, kept, side="right") - 1
    counts = np.bincount(idx, minlength=len(edges) - 1).astype(np.int64)
    n = int(counts.sum())
    if n == 0:
        raise InsufficientDataError("no samples fall inside the requested bins")
    density = counts / (n * np.diff(edges))
    return Histogram(edges, counts, density, n, n_zero, discrete)


def linear_histogram(samples, n_bins: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    """Plain density on ``n_bins`` equal bins; returns (edges, density)."""
    s = np.asarray(samples, dtype=np.float64).ravel()
    counts, edges = np.histogram(s, bins=n_bins, range=(lo, hi))
    total = counts.sum()
    if total == 0:
        raise InsufficientDataError("no samples inside the histogram range")
    return edges, counts / (total * np.diff(edges))
