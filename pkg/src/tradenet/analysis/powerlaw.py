"""Straight-line fits on double-logarithmic axes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientDataError
from .histogram import Histogram


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    slope_stderr: float
    r_squared: float
    n_points: int


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    stderr: float
    fit_range: tuple[float, float]
    r_squared: float
    n_bins: int
    n_samples: int = 0


def fit_line(x, y) -> LineFit:
    """Ordinary least squares y = a x + b with the usual slope standard error."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(x)
    if n < 2:
        raise InsufficientDataError("a line needs at least two points")
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    if sxx == 0:
        raise InsufficientDataError("all abscissae coincide")
    slope = np.sum((x - xm) * (y - ym)) / sxx
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((y - ym) ** 2))
    stderr = float(np.sqrt(ss_res / (n - 2) / sxx)) if n > 2 else 0.0
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return LineFit(float(slope), float(intercept), stderr, r2, n)


def fit_loglog(x, y) -> LineFit:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ok = (x > 0) & (y > 0)
    return fit_line(np.log10(x[ok]), np.log10(y[ok]))


def default_fit_range(hist: Histogram) -> tuple[float, float]:
    """Tail window: half a decade above the mode up to half a decade below the largest sample.

    For a monotone density the mode is the first occupied bin.
    """
    occ = np.flatnonzero(hist.occupied)
    lo = hist.bin_edges[int(np.argmax(hist.density))]
    hi = hist.bin_edges[occ[-1] + 1]
    return lo * 10 ** 0.5, hi * 10 ** -0.5


def fit_power_law(hist: Histogram, fit_range: tuple[float, float] | None = None,
                  min_bins: int = 4) -> PowerLawFit:
    """Fit density ~ x**(-exponent) over occupied bins whose centers lie in range."""
    if fit_range is None:
        fit_range = default_fit_range(hist)
    lo, hi = fit_range
    c = hist.centers
    sel = hist.occupied & (c >= lo) & (c <= hi)
    if sel.sum() < min_bins:
        raise InsufficientDataError(
            f"only {int(sel.sum())} occupied bins in [{lo:.4g}, {hi:.4g}], need {min_bins}")
    line = fit_loglog(c[sel], hist.density[sel])
    return PowerLawFit(-line.slope, line.slope_stderr, (float(lo), float(hi)), line.r_squared,
                       int(sel.sum()), hist.n_samples)
