"""Experiment protocol: lambda-sets, QSS gating, network refreshes, averaging.

For every lambda-set the market is brought to its quasi-stationary state
once.  The set's networks are then grown one after another from the same
evolving wealth vector, each starting from an empty graph.  Every random
stream is derived from ``(master_seed, purpose, set_index, net_index)``, so
a realization can be replayed on its own and results do not depend on how
sets are scheduled across workers.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import _kernels as K
from .analysis import (ConditionalMeanFit, Histogram, LambdaWealthCurve, PercolationCurve,
                       PowerLawFit, conditional_means, fit_power_law, giant_fraction_at,
                       lambda_wealth_curve, log_binned_histogram)
from .errors import EnsembleError, InsufficientDataError, InvalidParameterError
from .exchange import (Market, ModelParams, QssConfig, SavingProfile, generate_saving_profile,
                       initial_wealth, run_to_qss)
from .network import TradeGraph
from .rng import RNG_ALGORITHM, child_stream


class StopKind(enum.Enum):
    MEAN_DEGREE = "mean_degree"
    SINGLE_COMPONENT = "single_component"
    CLIQUE = "clique"


@dataclass(frozen=True)
class StopRule:
    kind: StopKind = StopKind.MEAN_DEGREE
    target: float | None = 1.0

    def __post_init__(self):
        if self.kind is StopKind.MEAN_DEGREE and not (self.target is not None and self.target > 0):
            raise InvalidParameterError("mean-degree stop rule needs a positive target")

    def link_target(self, n: int) -> int:
        max_links = n * (n - 1) // 2
        if self.kind is StopKind.MEAN_DEGREE:
            links = int(round(self.target * n / 2))
            if links > max_links:
                raise InvalidParameterError(
                    f"<k> = {self.target} needs {links} links, N = {n} allows {max_links}")
            return links
        return max_links


class ScheduleUnit(enum.Enum):
    RHO = "rho"
    MEAN_DEGREE = "mean_degree"


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelParams
    qss: QssConfig = field(default_factory=QssConfig)
    n_lambda_sets: int = 1
    networks_per_set: int = 1
    stop_rule: StopRule = field(default_factory=StopRule)
    snapshot_schedule: tuple[float, ...] = ()
    schedule_unit: ScheduleUnit = ScheduleUnit.RHO
    master_seed: int = 0
    bins_per_decade: int = 10
    fixed_lambda: float | None = None
    network_gap: float = 0.0
    max_growth_trades: int = 10**12
    # used by the multi-size and multi-exponent drivers only
    sweep_sizes: tuple[int, ...] = ()
    sweep_alphas: tuple[float, ...] = ()
    eta_range: tuple[float, float] = (0.5, 3.0)
    zeta_range: tuple[float, float] = (0.2, 1.5)

    def __post_init__(self):
        if self.n_lambda_sets < 1 or self.networks_per_set < 1:
            raise InvalidParameterError("n_lambda_sets and networks_per_set must be positive")
        if self.bins_per_decade < 1:
            raise InvalidParameterError("bins_per_decade must be positive")
        s = self.snapshot_schedule
        if any(b <= a for a, b in zip(s, s[1:])):
            raise InvalidParameterError("checkpoints must be strictly increasing")
        if any(v < 0 for v in s):
            raise InvalidParameterError("checkpoints must be nonnegative")
        if self.fixed_lambda is not None and not 0 <= self.fixed_lambda < 1:
            raise InvalidParameterError("fixed_lambda must lie in [0, 1)")
        if self.network_gap < 0 or self.max_growth_trades < 0:
            raise InvalidParameterError("network_gap and max_growth_trades must be nonnegative")
        if any(v < 2 for v in self.sweep_sizes):
            raise InvalidParameterError("every swept size must be >= 2")
        if any(not v >= 0 for v in self.sweep_alphas):
            raise InvalidParameterError("swept exponents must be nonnegative")
        for lo, hi in (self.eta_range, self.zeta_range):
            if not lo < hi:
                raise InvalidParameterError(f"empty search range ({lo}, {hi})")

    @property
    def sizes(self) -> tuple[int, ...]:
        return self.sweep_sizes or (self.model.n_traders,)

    def with_size(self, n: int) -> ExperimentConfig:
        return dataclasses.replace(self, model=dataclasses.replace(self.model, n_traders=n))

    def with_exponents(self, alpha: float, beta: float) -> ExperimentConfig:
        return dataclasses.replace(self, model=dataclasses.replace(self.model, alpha=alpha,
                                                                    beta=beta))

    def checkpoint_links(self) -> np.ndarray:
        n = self.model.n_traders
        rho = self.checkpoint_rho()
        return np.rint(rho * (n * (n - 1) // 2)).astype(np.int64)

    def checkpoint_rho(self) -> np.ndarray:
        v = np.asarray(self.snapshot_schedule, dtype=np.float64)
        if self.schedule_unit is ScheduleUnit.MEAN_DEGREE:
            return v / (self.model.n_traders - 1)
        return v


@dataclass
class RealizationOutput:
    set_index: int
    net_index: int
    n: int
    converged: bool
    qss_trades: int
    growth_trades: int = 0
    growth_complete: bool = False
    wealth: np.ndarray | None = None
    lambdas: np.ndarray | None = None
    degrees: np.ndarray | None = None
    strengths: np.ndarray | None = None
    weights: np.ndarray | None = None
    link_times: np.ndarray | None = None
    giant_trace: np.ndarray | None = None
    t_single: int | None = None
    t_clique: int | None = None
    checkpoint_giant: np.ndarray | None = None
    initial_total: float = 0.0
    final_total: float = 0.0
    graph: TradeGraph | None = field(default=None, repr=False)

    @property
    def conservation_error(self) -> float:
        return abs(self.final_total - self.initial_total) / self.initial_total


def saving_profile(config: ExperimentConfig, set_index: int) -> SavingProfile:
    """The lambda-set of ``set_index``; it depends on the set index only."""
    n = config.model.n_traders
    if config.fixed_lambda is not None:
        return SavingProfile(np.full(n, config.fixed_lambda))
    return generate_saving_profile(n, child_stream(config.master_seed, "lambda", set_index))


def _checkpoint_giant(config: ExperimentConfig, graph: TradeGraph) -> np.ndarray:
    if not config.snapshot_schedule:
        return np.zeros(0)
    n = graph.n
    links = config.checkpoint_links()
    _, giant = graph.link_trace()
    out = np.empty(links.size)
    reached = links <= giant.size
    out[reached] = giant_fraction_at(giant, n, config.checkpoint_rho()[reached])
    # past the end of growth the fraction stays where it was, which is exact
    # once the graph is connected
    out[~reached] = graph.giant_component_fraction() if graph.is_connected() else np.nan
    return out


def run_set(config: ExperimentConfig, set_index: int, upto: int | None = None,
            keep_graph: bool = False) -> list[RealizationOutput]:
    """All networks of one lambda-set (or the first ``upto`` of them)."""
    model = config.model
    n = model.n_traders
    seed = config.master_seed
    count = config.networks_per_set if upto is None else upto
    profile = saving_profile(config, set_index)
    state = initial_wealth(model, child_stream(seed, "initial", set_index))
    w0 = state.total
    market = Market(model, profile, state, child_stream(seed, "qss", set_index))
    state, report = run_to_qss(model, profile, config.qss, market.rng, market=market)
    if not report.converged:
        return [RealizationOutput(set_index, k, n, False, report.trades,
                                  initial_total=w0, final_total=state.total)
                for k in range(count)]
    stop_links = config.stop_rule.link_target(n)
    stop_single = config.stop_rule.kind is StopKind.SINGLE_COMPONENT
    gap = int(round(config.network_gap * n))
    out = []
    for k in range(count):
        if k > 0 and gap > 0:
            market.rng = child_stream(seed, "gap", set_index, k)
            market.run(gap)
        market.rng = child_stream(seed, "growth", set_index, k)
        g = TradeGraph(n)
        status, done = market.grow(g, stop_links, stop_single, config.max_growth_trades)
        times = g.growth_times()
        lt, ga = g.link_trace()
        out.append(RealizationOutput(
            set_index, k, n, True, report.trades, done, status == K.STOP_REACHED,
            state.wealth.copy(), profile.lambdas, g.degree_sequence(), g.strength_sequence(),
            g.edges()[2], lt, ga, times.t_single_component, times.t_clique,
            _checkpoint_giant(config, g), w0, state.total, g if keep_graph else None))
    return out


def run_realization(config: ExperimentConfig, set_index: int, net_index: int,
                    keep_graph: bool = False) -> RealizationOutput:
    """One network of one set.

    Wealth carries over between the networks of a set, so the set is
    replayed from its QSS up to ``net_index``.
    """
    if not 0 <= net_index < config.networks_per_set:
        raise InvalidParameterError(f"net_index {net_index} outside 0..{config.networks_per_set - 1}")
    if not 0 <= set_index < config.n_lambda_sets:
        raise InvalidParameterError(f"set_index {set_index} outside 0..{config.n_lambda_sets - 1}")
    return run_set(config, set_index, upto=net_index + 1, keep_graph=keep_graph)[-1]


@dataclass
class EnsembleOutput:
    config: ExperimentConfig
    realizations: list[RealizationOutput] = field(repr=False)
    wealth_hist: Histogram | None = None
    degree_hist: Histogram | None = None
    weight_hist: Histogram | None = None
    strength_hist: Histogram | None = None
    percolation: PercolationCurve | None = None
    lambda_curve: LambdaWealthCurve | None = None
    conditional: ConditionalMeanFit | None = None
    fits: dict[str, PowerLawFit] = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)

    @property
    def used(self) -> list[RealizationOutput]:
        return [r for r in self.realizations if r.converged]

    @property
    def n_realizations(self) -> int:
        return len(self.used)

    def pooled(self, name: str) -> np.ndarray:
        return np.concatenate([getattr(r, name) for r in self.used])


def _try(fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except InsufficientDataError:
        return None


def wealth_fit_range(model: ModelParams) -> tuple[float, float]:
    """Tail window for the wealth density: from the mean up to N/10 times the mean."""
    a = model.mean_wealth
    return a, a * model.n_traders / 10.0


def config_digest(config: ExperimentConfig) -> str:
    from .config import format_config
    return hashlib.sha256(format_config(config).encode()).hexdigest()


def summarize(config: ExperimentConfig, results: list[RealizationOutput]) -> EnsembleOutput:
    """Pool the converged realizations (in set, net order) and run the fits."""
    results = sorted(results, key=lambda r: (r.set_index, r.net_index))
    out = EnsembleOutput(config, results)
    used = out.used
    if not used:
        raise EnsembleError(f"all {len(results)} realizations failed to reach the QSS")
    b = config.bins_per_decade
    n = config.model.n_traders
    out.wealth_hist = _try(log_binned_histogram, out.pooled("wealth"), b)
    out.degree_hist = _try(log_binned_histogram, out.pooled("degrees"), b, discrete=True)
    out.weight_hist = _try(log_binned_histogram, out.pooled("weights"), b)
    out.strength_hist = _try(log_binned_histogram, out.pooled("strengths"), b)
    if out.wealth_hist is not None:
        f = _try(fit_power_law, out.wealth_hist, wealth_fit_range(config.model))
        if f is not None:
            out.fits["wealth"] = f
    for name in ("degree", "weight", "strength"):
        h = getattr(out, f"{name}_hist")
        f = _try(fit_power_law, h) if h is not None else None
        if f is not None:
            out.fits[name] = f
    if config.snapshot_schedule:
        sm = np.array([r.checkpoint_giant for r in used])
        # checkpoints that a disconnected graph never reached are NaN and skipped
        seen = np.count_nonzero(~np.isnan(sm), axis=0)
        total = np.where(np.isnan(sm), 0.0, sm).sum(axis=0)
        mean = np.divide(total, seen, out=np.full(total.size, np.nan), where=seen > 0)
        out.percolation = PercolationCurve(n, config.checkpoint_rho(), mean, len(used))
    if config.fixed_lambda is None:
        out.lambda_curve = _try(lambda_wealth_curve, [(r.wealth, r.lambdas) for r in used],
                                lam_max=1.0 - 1.0 / n)
    out.conditional = _try(conditional_means, out.pooled("degrees"), out.pooled("strengths"),
                           out.pooled("wealth"))
    out.manifest = build_manifest(config, results)
    return out


def build_manifest(config: ExperimentConfig, results: list[RealizationOutput]) -> dict:
    from .config import format_config
    used = [r for r in results if r.converged]
    return {
        "artifact_version": __version__,
        "rng_algorithm": RNG_ALGORITHM,
        "master_seed": config.master_seed,
        "config": format_config(config),
        "config_sha256": config_digest(config),
        "n_traders": config.model.n_traders,
        "realizations": len(results),
        "realizations_used": len(used),
        "not_converged": len(results) - len(used),
        "qss_trades": [int(r.qss_trades) for r in results if r.net_index == 0],
        "growth_trades": [int(r.growth_trades) for r in used],
        "growth_incomplete": sum(1 for r in used if not r.growth_complete),
        "max_conservation_error": max((r.conservation_error for r in results), default=0.0),
    }


def default_threads() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1


def run_ensemble(config: ExperimentConfig, threads: int | None = None,
                 keep_graphs: bool = False) -> EnsembleOutput:
    """Every set of the config, sets spread over a thread pool.

    The trading kernels release the GIL, so threads give real parallelism.
    Results are merged in (set, net) order whatever the completion order.
    """
    threads = threads or default_threads()
    sets = range(config.n_lambda_sets)
    if threads == 1:
        chunks = [run_set(config, s, keep_graph=keep_graphs) for s in sets]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda s: run_set(config, s, keep_graph=keep_graphs), sets))
    return summarize(config, [r for chunk in chunks for r in chunk])
