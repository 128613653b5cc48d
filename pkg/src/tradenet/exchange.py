"""Trading dynamics: quenched saving propensities, preferential pair
selection, the bipartite exchange rule and quasi-stationarity detection.

Two execution paths exist.  ``select_pair`` and ``trade_step`` operate on
one trade at a time with plain numpy (O(N) cumulative sums); they are the
readable reference.  :class:`Market` drives the compiled loop in
``_kernels`` with an O(log N) Fenwick tree.  Both consume the random stream
identically, so for the same seed they produce the same trajectory.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import DegenerateStateError, InsufficientDataError, InvalidParameterError


class InitialWealth(enum.Enum):
    EQUAL = "equal"
    UNIFORM_RANDOM = "uniform_random"


def selection_mode(exponent: float) -> int:
    """Map a selection exponent to the kernel's pick rule."""
    if math.isinf(exponent):
        return K.ARGMAX
    if exponent == 0.0:
        return K.UNIFORM
    return K.POWER


@dataclass(frozen=True)
class ModelParams:
    """Model parameters.  ``alpha``/``beta`` may be ``math.inf``."""

    n_traders: int
    alpha: float = 0.0
    beta: float = 0.0
    initial_wealth: InitialWealth = InitialWealth.EQUAL
    mean_wealth: float = 1.0

    def __post_init__(self):
        if int(self.n_traders) != self.n_traders or self.n_traders < 2:
            raise InvalidParameterError(f"n_traders must be an integer >= 2, got {self.n_traders}")
        for name in ("alpha", "beta"):
            v = float(getattr(self, name))
            if math.isnan(v) or v < 0:
                raise InvalidParameterError(f"{name} must be >= 0 or inf, got {v}")
            object.__setattr__(self, name, v)
        if not (self.mean_wealth > 0 and math.isfinite(self.mean_wealth)):
            raise InvalidParameterError(f"mean_wealth must be positive, got {self.mean_wealth}")
        object.__setattr__(self, "n_traders", int(self.n_traders))
        object.__setattr__(self, "initial_wealth", InitialWealth(self.initial_wealth))


@dataclass
class SavingProfile:
    lambdas: np.ndarray

    @property
    def n(self) -> int:
        return len(self.lambdas)


@dataclass
class WealthState:
    wealth: np.ndarray
    trade_count: int = 0

    @property
    def total(self) -> float:
        return float(self.wealth.sum())

    def copy(self) -> WealthState:
        return WealthState(self.wealth.copy(), self.trade_count)


@dataclass(frozen=True)
class TradeEvent:
    i: int
    j: int
    invested: float
    epsilon: float


def generate_saving_profile(n: int, rng: np.random.Generator) -> SavingProfile:
    """Draw ``n`` uniform fractions and rescale them so the largest is 1 - 1/n."""
    if n < 2:
        raise InvalidParameterError(f"need at least two traders, got {n}")
    u = rng.random(n)
    return rescale_saving_profile(u)


def rescale_saving_profile(draws) -> SavingProfile:
    u = np.asarray(draws, dtype=np.float64)
    n = len(u)
    if n < 2:
        raise InvalidParameterError(f"need at least two traders, got {n}")
    target = 1.0 - 1.0 / n
    top = int(np.argmax(u))
    lam = u * (target / u[top])
    lam[top] = target
    return SavingProfile(lam)


def initial_wealth(params: ModelParams, rng: np.random.Generator | None = None) -> WealthState:
    n, a = params.n_traders, params.mean_wealth
    if params.initial_wealth is InitialWealth.EQUAL:
        return WealthState(np.full(n, a, dtype=np.float64))
    if rng is None:
        raise InvalidParameterError("uniform random initial wealth needs a random stream")
    x = rng.uniform(0.0, 2.0 * a, size=n)
    x *= a / x.mean()
    return WealthState(x)


# -- single-trade reference path --------------------------------------------

def _pick(x: np.ndarray, exponent: float, rng: np.random.Generator, exclude: int = -1) -> int:
    n = len(x)
    if math.isinf(exponent):
        masked = np.array(x, dtype=np.float64)
        if exclude >= 0:
            masked[exclude] = -np.inf
        return int(np.argmax(masked))
    u = rng.random()
    if exponent == 0.0:
        if exclude < 0:
            return min(int(u * n), n - 1)
        k = min(int(u * (n - 1)), n - 2)
        return k + 1 if k >= exclude else k
    w = np.zeros(n)
    pos = x > 0
    logs = np.log(x[pos])
    w[pos] = np.exp(exponent * (logs - logs.max()))
    if exclude >= 0:
        w[exclude] = 0.0
    cum = np.cumsum(w)
    if cum[-1] <= 0:
        raise DegenerateStateError("total selection weight is zero")
    k = int(np.searchsorted(cum, u * cum[-1], side="right"))
    return min(k, n - 1)


def select_pair(state: WealthState, params: ModelParams, rng: np.random.Generator) -> tuple[int, int]:
    """Draw the ordered trading pair (i, j), i by ``alpha`` and j by ``beta``."""
    x = state.wealth
    if not np.any(x > 0):
        raise DegenerateStateError("all traders have zero wealth")
    i = _pick(x, params.alpha, rng)
    j = _pick(x, params.beta, rng, exclude=i)
    return i, j


def trade_step(state: WealthState, profile: SavingProfile, i: int, j: int,
               rng: np.random.Generator) -> TradeEvent:
    n = len(state.wealth)
    if not (0 <= i < n and 0 <= j < n):
        raise InvalidParameterError(f"trader index out of range: ({i}, {j}) for N={n}")
    if i == j:
        raise InvalidParameterError("a trader cannot trade with itself")
    x, lam = state.wealth, profile.lambdas
    xi, xj = x[i], x[j]
    invested = (1.0 - lam[i]) * xi + (1.0 - lam[j]) * xj
    eps = rng.random()
    x[i] = lam[i] * xi + eps * invested
    x[j] = lam[j] * xj + (1.0 - eps) * invested
    state.trade_count += 1
    return TradeEvent(int(i), int(j), float(invested), float(eps))


# -- compiled engine --------------------------------------------------------

class Market:
    """Compiled trading engine bound to one wealth vector and saving profile.

    The wealth array of ``state`` is mutated in place.  Selection weights
    are ``(x / X)**exponent`` with ``X`` the (conserved) total wealth, which
    keeps every weight <= 1 for any finite exponent.
    """

    def __init__(self, params: ModelParams, profile: SavingProfile, state: WealthState,
                 rng: np.random.Generator, rebuild_every: int | None = None):
        n = params.n_traders
        if len(profile.lambdas) != n or len(state.wealth) != n:
            raise InvalidParameterError("profile, state and params disagree on N")
        state.wealth = np.ascontiguousarray(state.wealth, dtype=np.float64)
        self.params = params
        self.profile = profile
        self.state = state
        self.rng = rng
        self.lam = np.ascontiguousarray(profile.lambdas, dtype=np.float64)

        mode_a, mode_b = selection_mode(params.alpha), selection_mode(params.beta)
        shared = int(mode_a == K.POWER and mode_b == K.POWER and params.alpha == params.beta)
        total = state.total
        if not total > 0:
            raise DegenerateStateError("total wealth must be positive")
        self.fparams = np.array([
            params.alpha if mode_a == K.POWER else 0.0,
            params.beta if mode_b == K.POWER else 0.0,
            math.log(total),
        ])
        seg_size = 1 << max(1, (n - 1).bit_length())
        self.istate = np.zeros(7, dtype=np.int64)
        self.istate[K._I_REBUILD_EVERY] = rebuild_every or max(1024, n)
        self.istate[K._I_SEG_SIZE] = seg_size
        self.istate[K._I_TOPBIT] = 1 << (n.bit_length() - 1)
        self.istate[K._I_MODE_A] = mode_a
        self.istate[K._I_MODE_B] = mode_b
        self.istate[K._I_SHARED] = shared
        self.wa = np.zeros(n)
        self.ta = np.zeros(n + 1)
        if shared:
            self.wb, self.tb = self.wa, self.ta
        else:
            self.wb = np.zeros(n)
            self.tb = np.zeros(n + 1)
        self.seg = np.full(2 * seg_size, -1, dtype=np.int64)
        K.rebuild(self.x, self.fparams, self.istate, self.wa, self.ta, self.wb, self.tb, self.seg)

    @property
    def x(self) -> np.ndarray:
        return self.state.wealth

    def _check(self, status: int):
        if status == K.DEGENERATE:
            raise DegenerateStateError("selection weights vanished during trading")

    def run(self, n_trades: int) -> int:
        """Execute ``n_trades`` trades without recording links."""
        if n_trades <= 0:
            return 0
        status, done = K.run_trades(self.x, self.lam, self.fparams, self.istate, self.wa,
                                    self.ta, self.wb, self.tb, self.seg, self.rng, int(n_trades))
        self.state.trade_count += int(done)
        self._check(status)
        return int(done)

    def sum_sq(self) -> float:
        return float(np.dot(self.x, self.x))

    def grow(self, graph, stop_links: int, stop_single: bool, max_trades: int) -> tuple[int, int]:
        """Trade while recording into ``graph`` until a stop rule or budget fires."""
        done_total = 0
        while True:
            status, done = K.grow(
                self.x, self.lam, self.fparams, self.istate, self.wa, self.ta, self.wb,
                self.tb, self.seg, self.rng, graph._g, graph._hkeys, graph._hedge,
                graph._eu, graph._ev, graph._ew, graph._deg, graph._strength,
                graph._parent, graph._csize, graph._link_time, graph._giant_after,
                int(stop_links), bool(stop_single), int(max_trades - done_total))
            done_total += int(done)
            self.state.trade_count += int(done)
            if status == K.EDGES_FULL:
                graph._grow_capacity()
                continue
            self._check(status)
            return status, done_total


# -- quasi-stationary state -------------------------------------------------

@dataclass
class QssConfig:
    """Block-mean stability test on sum(x**2).

    ``sample_stride`` is an absolute trade count; when left as ``None`` the
    stride is ``stride_per_trader * N`` (10 N by default).
    """

    window: int = 100
    rel_tol: float = 1e-3
    sample_stride: int | None = None
    max_trades: int = 2_000_000_000
    stride_per_trader: float = 10.0

    def __post_init__(self):
        if self.window < 2:
            raise InvalidParameterError("window must be >= 2")
        if not self.rel_tol > 0:
            raise InvalidParameterError("rel_tol must be positive")
        if self.sample_stride is not None and self.sample_stride < 1:
            raise InvalidParameterError("sample_stride must be positive")
        if self.max_trades < 0:
            raise InvalidParameterError("max_trades must be non-negative")
        if not self.stride_per_trader > 0:
            raise InvalidParameterError("stride_per_trader must be positive")

    def stride(self, n_traders: int) -> int:
        if self.sample_stride is not None:
            return self.sample_stride
        return max(1, int(round(self.stride_per_trader * n_traders)))


@dataclass
class QssReport:
    converged: bool
    trades: int
    final_sum_sq: float
    series: list[float] = field(default_factory=list, repr=False)

    @property
    def budget_exhausted(self) -> bool:
        return not self.converged


def qss_reached(sum_sq_series, cfg: QssConfig) -> bool:
    s = np.asarray(sum_sq_series, dtype=np.float64)
    w = cfg.window
    if len(s) < 2 * w:
        raise InsufficientDataError(f"need {2 * w} samples, have {len(s)}")
    old = s[-2 * w:-w].mean()
    new = s[-w:].mean()
    if old == new:
        return True
    return abs(new - old) < cfg.rel_tol * abs(old)


def run_to_qss(params: ModelParams, profile: SavingProfile, cfg: QssConfig,
               rng: np.random.Generator, state: WealthState | None = None,
               market: Market | None = None) -> tuple[WealthState, QssReport]:
    """Trade until sum(x**2) stops drifting or ``cfg.max_trades`` is spent."""
    if market is None:
        if state is None:
            state = initial_wealth(params, rng)
        market = Market(params, profile, state, rng)
    state = market.state
    stride = cfg.stride(params.n_traders)
    series: list[float] = []
    trades = 0
    converged = False
    while trades + stride <= cfg.max_trades:
        trades += market.run(stride)
        series.append(market.sum_sq())
        if len(series) >= 2 * cfg.window and qss_reached(series, cfg):
            converged = True
            break
    return state, QssReport(converged, trades, market.sum_sq(), series)
