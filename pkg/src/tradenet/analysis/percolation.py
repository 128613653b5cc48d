"""Giant-component curves, percolation thresholds and their size scaling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientDataError, NotBracketedError
from .powerlaw import fit_line


@dataclass(frozen=True)
class ThetaFit:
    theta: float
    stderr: float
    intercept: float


@dataclass
class PercolationCurve:
    """Ensemble-averaged largest-component fraction against link density for one N."""

    n: int
    rho: np.ndarray
    mean_sm: np.ndarray
    n_realizations: int

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.rho.tolist(), self.mean_sm.tolist()))

    @property
    def threshold(self) -> float:
        return percolation_threshold(self.points)


def links_at_density(n: int, rho) -> np.ndarray:
    """Link counts closest to the requested densities."""
    max_links = n * (n - 1) // 2
    return np.clip(np.rint(np.asarray(rho, dtype=np.float64) * max_links), 0, max_links).astype(np.int64)


def giant_fraction_at(giant_after, n: int, rho) -> np.ndarray:
    """Largest-component fraction once the graph holds rho * N(N-1)/2 links.

    ``giant_after[m]`` is the largest-component size right after link m+1
    appeared (the per-link trace of :class:`TradeGraph`).  Densities beyond
    the end of the trace are an error.
    """
    giant_after = np.asarray(giant_after)
    m = links_at_density(n, rho)
    if m.size and m.max() > giant_after.size:
        raise InsufficientDataError(
            f"trace holds {giant_after.size} links, density grid needs {int(m.max())}")
    sizes = np.where(m > 0, giant_after[np.maximum(m - 1, 0)], 1)
    return sizes / n


def average_curve(traces, n: int, rho) -> PercolationCurve:
    """Average the largest-component fraction of several growth traces on a common grid."""
    if len(traces) == 0:
        raise InsufficientDataError("no traces to average")
    rho = np.asarray(rho, dtype=np.float64)
    total = np.zeros(rho.size)
    for tr in traces:
        total += giant_fraction_at(tr, n, rho)
    return PercolationCurve(n, rho, total / len(traces), len(traces))


def percolation_threshold(points) -> float:
    """Density where the curve first crosses 1/2 going up, by linear interpolation."""
    pts = [(float(r), float(s)) for r, s in points]
    if not pts:
        raise NotBracketedError("empty curve")
    if pts[0][1] == 0.5:
        return pts[0][0]
    for (r0, s0), (r1, s1) in zip(pts, pts[1:]):
        if s1 == 0.5:
            return r1
        if s0 < 0.5 < s1:
            return r0 + (0.5 - s0) * (r1 - r0) / (s1 - s0)
    raise NotBracketedError("curve never crosses 1/2 from below")


def fit_theta(thresholds) -> ThetaFit:
    """theta from rho_c(N) ~ N**(-theta), least squares in log-log."""
    items = sorted(thresholds.items())
    if len(items) < 3:
        raise InsufficientDataError(f"need at least 3 sizes, got {len(items)}")
    n = np.array([k for k, _ in items], dtype=np.float64)
    rc = np.array([v for _, v in items], dtype=np.float64)
    line = fit_line(np.log10(n), np.log10(rc))
    return ThetaFit(-line.slope, line.slope_stderr, line.intercept)
