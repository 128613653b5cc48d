"""Finite-size-scaling collapse of size-dependent distributions.

Curves P(k, N) are rescaled to (k / N**zeta, P * N**eta).  The collapse
score interpolates every rescaled curve (linearly in log-log) onto a common
grid spanning the support shared by all of them and averages the squared
deviation of log10 P from its across-curve mean.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ..errors import InsufficientDataError, NoOverlapError
from .histogram import Histogram

MIN_OVERLAP_POINTS = 4
GRID_POINTS = 64


@dataclass(frozen=True)
class ScalingCollapse:
    eta: float
    zeta: float
    score: float

    @property
    def derived_gamma(self) -> float:
        return self.eta / self.zeta


def _curve(h, include_zero: bool):
    if isinstance(h, Histogram):
        occ = h.occupied
        return np.log10(h.centers[occ]), np.log10(h.total_density(include_zero)[occ])
    k, p = (np.asarray(v, dtype=np.float64) for v in h)
    ok = (k > 0) & (p > 0)
    return np.log10(k[ok]), np.log10(p[ok])


def _curves(histograms, include_zero):
    if len(histograms) < 2:
        raise InsufficientDataError("a collapse needs at least two system sizes")
    return [(np.log10(n), *_curve(h, include_zero)) for n, h in sorted(histograms.items())]


def _score(curves, eta, zeta, window=None):
    xs, ys = [], []
    for logn, lx, ly in curves:
        xs.append(lx - zeta * logn)
        ys.append(ly + eta * logn)
    lo = max(x[0] for x in xs)
    hi = min(x[-1] for x in xs)
    if window is not None:
        lo, hi = max(lo, window[0]), min(hi, window[1])
    if not hi > lo:
        raise NoOverlapError(f"rescaled supports do not overlap (eta={eta}, zeta={zeta})")
    for x in xs:
        inside = np.count_nonzero((x >= lo) & (x <= hi))
        if inside < MIN_OVERLAP_POINTS:
            raise NoOverlapError(
                f"a curve has {inside} points in the shared support, need {MIN_OVERLAP_POINTS}")
    grid = np.linspace(lo, hi, GRID_POINTS)
    table = np.array([np.interp(grid, x, y) for x, y in zip(xs, ys)])
    return float(np.mean(np.var(table, axis=0)))


def collapse_score(histograms, eta: float, zeta: float, include_zero: bool = False,
                   window: tuple[float, float] | None = None) -> float:
    """Mean squared log10 deviation between rescaled curves (0 for a perfect collapse).

    ``histograms`` maps system size N to a :class:`Histogram` or to a pair of
    arrays ``(k, P)``.  ``window`` optionally restricts the comparison to a
    range of log10 of the scaled variable.
    """
    return _score(_curves(histograms, include_zero), eta, zeta, window)


def optimize_collapse(histograms, eta_range=(0.5, 3.0), zeta_range=(0.2, 1.5),
                      step: float = 0.02, include_zero: bool = False,
                      window: tuple[float, float] | None = None) -> ScalingCollapse:
    """Grid search at ``step`` resolution, then Nelder-Mead from the best node.

    The refinement is confined to the search box.
    """
    curves = _curves(histograms, include_zero)

    def objective(p):
        if not (eta_range[0] <= p[0] <= eta_range[1] and zeta_range[0] <= p[1] <= zeta_range[1]):
            return np.inf
        try:
            return _score(curves, p[0], p[1], window)
        except NoOverlapError:
            return np.inf

    etas = np.arange(eta_range[0], eta_range[1] + step / 2, step)
    zetas = np.arange(zeta_range[0], zeta_range[1] + step / 2, step)
    best, best_val = None, np.inf
    for e, z in itertools.product(etas, zetas):
        v = objective((e, z))
        if v < best_val:
            best, best_val = (e, z), v
    if best is None:
        raise NoOverlapError("no point of the search box gives overlapping curves")
    res = minimize(objective, np.array(best), method="Nelder-Mead",
                   options={"xatol": 1e-6, "fatol": 1e-14, "maxiter": 2000})
    if res.fun <= best_val:
        best, best_val = tuple(res.x), float(res.fun)
    return ScalingCollapse(float(best[0]), float(best[1]), float(best_val))


def optimize_shift_collapse(curves_by_n) -> tuple[float, float]:
    """Best horizontal rescaling x * N**theta of curves y(x) increasing in x.

    ``curves_by_n`` maps N to ``(x, y)`` (e.g. giant-component fraction vs
    link density).  At each order-parameter level y shared by all curves the
    spread of log10(x N**theta) is measured; that spread is quadratic in
    theta, so the minimizer is exact.  Returns (theta, score).
    """
    items = sorted(curves_by_n.items())
    if len(items) < 2:
        raise InsufficientDataError("need at least two sizes")
    inv = []
    for n, (x, y) in items:
        x = np.asarray(x, dtype=np.float64)
        y = np.maximum.accumulate(np.asarray(y, dtype=np.float64))
        keep = np.concatenate(([True], np.diff(y) > 0))
        inv.append((np.log10(n), y[keep], np.log10(x[keep])))
    lo = max(v[1][0] for v in inv)
    hi = min(v[1][-1] for v in inv)
    if not hi > lo:
        raise NoOverlapError("order-parameter ranges do not overlap")
    levels = np.linspace(lo, hi, GRID_POINTS)
    table = np.array([np.interp(levels, y, lx) for _, y, lx in inv])
    d = np.array([v[0] for v in inv])
    d -= d.mean()
    centered = table - table.mean(axis=0)
    theta = -float(np.sum(d[:, None] * centered) / (levels.size * np.sum(d ** 2)))
    score = float(np.mean(np.var(table + theta * d[:, None], axis=0)))
    return theta, score
