"""Wealth against saving propensity, and the density that follows from it."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from ..errors import InsufficientDataError, InvalidParameterError
from .powerlaw import fit_loglog

CHI_WINDOW_LOW = 0.3


@dataclass
class LambdaWealthCurve:
    """Binned mean wealth against lambda.

    ``product`` is the bin mean of x(1 - lambda) taken trader by trader;
    the fit of log product against log lambda gives chi.
    """

    lambda_bins: np.ndarray
    mean_wealth: np.ndarray
    product: np.ndarray
    counts: np.ndarray
    chi: float
    chi_stderr: float
    fit_window: tuple[float, float]
    excluded_bins: int = 0


def _pool(snapshots):
    xs, ls = [], []
    for x, lam in snapshots:
        x = np.asarray(x, dtype=np.float64)
        lam = np.asarray(lam, dtype=np.float64)
        if x.shape != lam.shape:
            raise InvalidParameterError("wealth and lambda arrays differ in shape")
        xs.append(x)
        ls.append(lam)
    if not xs:
        raise InsufficientDataError("no snapshots")
    return np.concatenate(xs), np.concatenate(ls)


def lambda_wealth_curve(snapshots, bins: int | None = 20, lam_max: float | None = None,
                        window_low: float = CHI_WINDOW_LOW) -> LambdaWealthCurve:
    """Mean wealth per lambda bin and the exponent chi.

    ``snapshots`` is a sequence of ``(wealth, lambdas)`` pairs, one per
    post-QSS snapshot (several sets may be pooled).  Bins are equal-width
    on [0, lam_max]; with ``bins=None`` every distinct lambda is its own bin.
    The abscissa of a bin is the geometric mean of its lambdas.  Empty bins
    inside the window are dropped and counted in ``excluded_bins``.
    """
    x, lam = _pool(snapshots)
    if lam_max is None:
        lam_max = float(lam.max())
    prod = x * (1.0 - lam)
    pos = lam > 0
    x, lam, prod = x[pos], lam[pos], prod[pos]
    if bins is None:
        keys, idx = np.unique(lam, return_inverse=True)
        nb = keys.size
    else:
        if bins < 2:
            raise InvalidParameterError("need at least two bins")
        edges = np.linspace(0.0, lam_max, bins + 1)
        idx = np.clip(np.searchsorted(edges, lam, side="right") - 1, 0, bins - 1)
        nb = bins
    counts = np.bincount(idx, minlength=nb)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_x = np.bincount(idx, weights=x, minlength=nb) / counts
        mean_p = np.bincount(idx, weights=prod, minlength=nb) / counts
        centers = np.exp(np.bincount(idx, weights=np.log(lam), minlength=nb) / counts)
    if bins is None:
        in_window = keys >= window_low
    else:
        in_window = edges[:-1] >= window_low - 1e-12
    ok = in_window & (counts > 0)
    excluded = int(np.count_nonzero(in_window & (counts == 0)))
    if np.count_nonzero(ok) < 3:
        raise InsufficientDataError("fewer than three populated bins in the chi window")
    line = fit_loglog(centers[ok], mean_p[ok])
    return LambdaWealthCurve(centers, mean_x, mean_p, counts, line.slope, line.slope_stderr,
                             (window_low, lam_max), excluded)


@dataclass
class TheoreticalDensity:
    """Wealth density implied by <x(lambda)> = K lambda**chi / (1 - lambda), uniform lambda."""

    chi: float
    normalization: float
    scale: float
    lam_max: float
    lam: np.ndarray
    x: np.ndarray
    p: np.ndarray


def _bracket(lam, chi):
    return lam ** -chi + (1.0 - lam) * chi * lam ** (-chi - 1.0)


def propensity_density(chi: float, n_points: int = 2000, n_traders: int = 1024,
                       lam_min: float = 1e-9) -> TheoreticalDensity:
    """Tabulate P(x) = C x**-2 / [lambda**-chi + (1 - lambda) chi lambda**(-chi-1)].

    lambda runs over (0, 1 - 1/N], the support of the saving profile; K is
    chosen so the mean wealth is one and C so P integrates to one over x.
    """
    if not chi >= 0:
        raise InvalidParameterError(f"chi must be nonnegative, got {chi}")
    lam_max = 1.0 - 1.0 / n_traders
    mean_int, _ = quad(lambda l: l ** chi / (1.0 - l), 0.0, lam_max, limit=200)
    k = lam_max / mean_int

    def x_of(l):
        return k * l ** chi / (1.0 - l)

    def dx(l):
        return k * (chi * l ** (chi - 1.0) / (1.0 - l) + l ** chi / (1.0 - l) ** 2) if chi else \
            k / (1.0 - l) ** 2

    mass, _ = quad(lambda l: dx(l) / (x_of(l) ** 2 * _bracket(l, chi)), 0.0, lam_max, limit=200)
    c = 1.0 / mass
    t = np.linspace(math.log(lam_min / (1 - lam_min)), math.log(lam_max / (1 - lam_max)), n_points)
    lam = 1.0 / (1.0 + np.exp(-t))
    lam[-1] = lam_max
    x = x_of(lam)
    p = c / (x ** 2 * _bracket(lam, chi))
    return TheoreticalDensity(chi, c, k, lam_max, lam, x, p)


@dataclass
class ConditionalMeanFit:
    k_values: np.ndarray
    mean_strength: np.ndarray
    mean_wealth: np.ndarray
    counts: np.ndarray
    phi: float
    phi_stderr: float
    mu: float
    mu_stderr: float


def degree_bins(k_max: int, linear_until: int = 16, bins_per_decade: int = 10) -> np.ndarray:
    """Integer bins [e_i, e_i+1): one per degree up to ``linear_until``, geometric above."""
    edges = list(range(1, min(k_max, linear_until) + 2))
    if k_max > linear_until:
        top = linear_until + 1
        while top <= k_max:
            nxt = max(top + 1, int(math.ceil(top * 10 ** (1.0 / bins_per_decade))))
            edges.append(nxt)
            top = nxt
    return np.array(edges, dtype=np.float64)


def conditional_means(degrees, strengths, wealth, min_count: int = 10,
                      linear_until: int = 16, bins_per_decade: int = 10) -> ConditionalMeanFit:
    """<s(k)> ~ k**phi and <x(k)> ~ k**mu over degree bins holding >= min_count nodes.

    The three arrays are aligned per node and may pool several graphs.
    Nodes without links are ignored.
    """
    k = np.asarray(degrees, dtype=np.float64).ravel()
    s = np.asarray(strengths, dtype=np.float64).ravel()
    x = np.asarray(wealth, dtype=np.float64).ravel()
    if not (k.shape == s.shape == x.shape):
        raise InvalidParameterError("degree, strength and wealth arrays must align")
    linked = k > 0
    k, s, x = k[linked], s[linked], x[linked]
    if k.size == 0:
        raise InsufficientDataError("no linked nodes")
    edges = degree_bins(int(k.max()), linear_until, bins_per_decade)
    idx = np.searchsorted(edges, k, side="right") - 1
    nb = edges.size - 1
    counts = np.bincount(idx, minlength=nb)
    ok = counts >= min_count
    if np.count_nonzero(ok) < 3:
        raise InsufficientDataError(
            f"only {int(np.count_nonzero(ok))} degree bins hold {min_count} nodes, need 3")
    c = counts[ok]
    kb = np.bincount(idx, weights=k, minlength=nb)[ok] / c
    sb = np.bincount(idx, weights=s, minlength=nb)[ok] / c
    xb = np.bincount(idx, weights=x, minlength=nb)[ok] / c
    fs = fit_loglog(kb, sb)
    fx = fit_loglog(kb, xb)
    return ConditionalMeanFit(kb, sb, xb, c, fs.slope, fs.slope_stderr, fx.slope, fx.slope_stderr)
