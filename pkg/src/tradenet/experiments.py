"""Multi-size and multi-exponent studies built on :func:`run_ensemble`.

Each driver returns plain results; writing files is left to the CLI.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import gaussian_kde

from .analysis import (PercolationCurve, ScalingCollapse, ThetaFit, average_curve, fit_theta,
                       optimize_collapse, optimize_shift_collapse,
                       percolation_threshold)
from .analysis.histogram import Histogram
from .ensemble import (EnsembleOutput, ExperimentConfig, StopKind, StopRule, run_ensemble)
from .errors import InsufficientDataError, NotBracketedError
from .exchange import InitialWealth

CORNERS = ((math.inf, 0.0), (0.0, math.inf), (math.inf, math.inf))
CORNER_GROWTH_PER_TRADER = 20
# the kernel estimate of the ln w mode thins larger samples to this size
KDE_SAMPLE = 50_000


def by_size(cfg: ExperimentConfig, threads: int | None = None,
            keep_graphs: bool = False) -> dict[int, EnsembleOutput]:
    return {n: run_ensemble(cfg.with_size(n), threads, keep_graphs) for n in cfg.sizes}


# -- percolation --------------------------------------------------------------

@dataclass
class PercolationStudy:
    curves: dict[int, PercolationCurve]
    thresholds: dict[int, float]
    theta: ThetaFit | None
    shift_theta: float | None
    shift_score: float | None
    ensembles: dict[int, EnsembleOutput] = field(repr=False, default_factory=dict)


def percolation_grid(cfg: ExperimentConfig, points: int = 400) -> np.ndarray:
    """Checkpoint densities of the config, or a dense grid up to the stop target."""
    if cfg.snapshot_schedule:
        return cfg.checkpoint_rho()
    n = cfg.model.n_traders
    top = cfg.stop_rule.link_target(n) / (n * (n - 1) / 2)
    return np.linspace(0.0, top, points + 1)[1:]


def percolation_study(cfg: ExperimentConfig, threads: int | None = None,
                      keep_graphs: bool = False) -> PercolationStudy:
    curves, ens = {}, {}
    for n in cfg.sizes:
        c = cfg.with_size(n)
        out = run_ensemble(c, threads, keep_graphs)
        ens[n] = out
        curves[n] = average_curve([r.giant_trace for r in out.used], n, percolation_grid(c))
    thresholds = {}
    for n, cur in curves.items():
        try:
            thresholds[n] = percolation_threshold(cur.points)
        except NotBracketedError:
            pass
    theta = fit_theta(thresholds) if len(thresholds) >= 3 else None
    shift = shift_score = None
    if len(curves) >= 2:
        shift, shift_score = optimize_shift_collapse(
            {n: (cur.rho[cur.rho > 0], cur.mean_sm[cur.rho > 0]) for n, cur in curves.items()})
    return PercolationStudy(curves, thresholds, theta, shift, shift_score, ens)


# -- finite-size collapse -----------------------------------------------------

@dataclass
class CollapseStudy:
    degree: ScalingCollapse | None
    strength: ScalingCollapse | None
    ensembles: dict[int, EnsembleOutput] = field(repr=False, default_factory=dict)


def collapse_study(cfg: ExperimentConfig, threads: int | None = None,
                   keep_graphs: bool = False) -> CollapseStudy:
    ens = by_size(cfg, threads, keep_graphs)
    if len(ens) < 2:
        raise InsufficientDataError("a collapse needs at least two sizes (set 'sizes')")
    result = {}
    for name in ("degree", "strength"):
        hists = {n: getattr(o, f"{name}_hist") for n, o in ens.items()}
        result[name] = optimize_collapse(hists, cfg.eta_range, cfg.zeta_range)
    return CollapseStudy(result["degree"], result["strength"], ens)


# -- exponent sweeps ----------------------------------------------------------

def sweep_study(cfg: ExperimentConfig, threads: int | None = None,
                keep_graphs: bool = False) -> dict[tuple[float, int], EnsembleOutput]:
    """alpha = beta over ``alphas`` (or the config's own pair) at every size."""
    alphas = cfg.sweep_alphas or (cfg.model.alpha,)
    out = {}
    for a in alphas:
        c = cfg.with_exponents(a, a) if cfg.sweep_alphas else cfg
        for n in cfg.sizes:
            out[(a, n)] = run_ensemble(c.with_size(n), threads, keep_graphs)
    return out


# -- clique growth --------------------------------------------------------------

@dataclass
class CliqueResult:
    alpha: float
    beta: float
    ensemble: EnsembleOutput = field(repr=False)
    log_weight_hist: tuple[np.ndarray, np.ndarray]
    peak_log_weight: float
    t_single: list[int]
    t_clique: list[int]


def log_weight_density(weights, bins: int = 60) -> tuple[np.ndarray, np.ndarray, float]:
    """Density of ln w on equal bins; returns (centers, density, peak position).

    The peak is the mode of a Gaussian kernel estimate, which is far less
    noisy than the tallest histogram bin.
    """
    lw = np.log(np.asarray(weights, dtype=np.float64))
    counts, edges = np.histogram(lw, bins=bins)
    dens = counts / (counts.sum() * np.diff(edges))
    centers = 0.5 * (edges[:-1] + edges[1:])
    sample = lw if lw.size <= KDE_SAMPLE else lw[:: -(-lw.size // KDE_SAMPLE)]
    grid = np.linspace(edges[0], edges[-1], 2001)
    kde = gaussian_kde(sample)(grid)
    return centers, dens, float(grid[int(np.argmax(kde))])


def clique_study(cfg: ExperimentConfig, threads: int | None = None,
                 keep_graphs: bool = False) -> list[CliqueResult]:
    """Grow every network to the full clique for each alpha (beta from the config)."""
    base = dataclasses.replace(cfg, stop_rule=StopRule(StopKind.CLIQUE, None))
    alphas = cfg.sweep_alphas or (cfg.model.alpha,)
    out = []
    for a in alphas:
        c = base.with_exponents(a, cfg.model.beta)
        ens = run_ensemble(c, threads, keep_graphs)
        centers, dens, peak = log_weight_density(ens.pooled("weights"))
        out.append(CliqueResult(a, cfg.model.beta, ens, (centers, dens), peak,
                                [r.t_single for r in ens.used if r.t_single is not None],
                                [r.t_clique for r in ens.used if r.t_clique is not None]))
    return out


# -- limiting corners -------------------------------------------------------------

@dataclass
class CornerReport:
    alpha: float
    beta: float
    ensemble: EnsembleOutput = field(repr=False)
    wealth_hist: Histogram
    tail_exponent: float | None
    n_links: list[int]
    max_degree: list[int]
    richest_degree: list[int]
    star: bool
    dimer: bool


def corners_study(cfg: ExperimentConfig, threads: int | None = None,
                  keep_graphs: bool = False) -> list[CornerReport]:
    """(inf, 0), (0, inf) and (inf, inf) at the config's N.

    Growth runs to a single component or for ``max_growth_trades``, capped
    at 20 N trades since the dimer corner never connects.  The (inf, inf)
    point starts from uniformly random wealth: with equal wealth its first
    pick would be a pure tie.
    """
    n = cfg.model.n_traders
    budget = min(cfg.max_growth_trades, CORNER_GROWTH_PER_TRADER * n)
    out = []
    for a, b in CORNERS:
        c = dataclasses.replace(cfg.with_exponents(a, b), max_growth_trades=budget,
                                stop_rule=StopRule(StopKind.SINGLE_COMPONENT, None))
        if math.isinf(a) and math.isinf(b):
            c = dataclasses.replace(c, model=dataclasses.replace(
                c.model, initial_wealth=InitialWealth.UNIFORM_RANDOM))
        ens = run_ensemble(c, threads, keep_graphs)
        links, kmax, krich = [], [], []
        for r in ens.used:
            links.append(int(r.degrees.sum() // 2))
            kmax.append(int(r.degrees.max()))
            krich.append(int(r.degrees[int(np.argmax(r.wealth))]))
        fit = ens.fits.get("wealth")
        out.append(CornerReport(
            a, b, ens, ens.wealth_hist, fit.exponent - 1.0 if fit else None, links, kmax, krich,
            star=all(k == n - 1 for k in kmax), dimer=all(m == 1 for m in links)))
    return out


def pareto_study(cfg: ExperimentConfig, threads: int | None = None,
                 keep_graphs: bool = False) -> dict[int, EnsembleOutput]:
    return by_size(cfg, threads, keep_graphs)
