"""Weighted trade network grown from the sequence of trades.

A link appears the first time a pair trades and afterwards only its weight
(cumulative invested amount) grows.  Connected components are tracked
incrementally with union-find, giving the largest-component size after
every new link.

Edges are kept as parallel arrays ``(u, v, w)`` with ``u < v`` in creation
order, indexed by an open-addressing hash on the pair key so the existence
check is O(1).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels as K
from .errors import CliqueUnavailableError, InvalidParameterError


class LinkOutcome(enum.Enum):
    NEW_LINK = "new"
    EXISTING_LINK = "existing"


@dataclass(frozen=True)
class GrowthTimes:
    t_single_component: int | None
    t_clique: int | None


class TradeGraph:
    def __init__(self, n: int, capacity: int | None = None):
        if n < 2:
            raise InvalidParameterError(f"graph needs at least two nodes, got {n}")
        self.n = int(n)
        self.max_links = self.n * (self.n - 1) // 2
        cap = min(self.max_links, max(16, capacity or 4 * self.n))
        self._g = np.zeros(5, dtype=np.int64)
        self._g[K.G_LARGEST] = 1
        self._g[K.G_T_SINGLE] = -1
        self._g[K.G_T_CLIQUE] = -1
        self._deg = np.zeros(self.n, dtype=np.int64)
        self._strength = np.zeros(self.n)
        self._parent = np.arange(self.n, dtype=np.int64)
        self._csize = np.ones(self.n, dtype=np.int64)
        self._alloc_edges(cap)

    def _alloc_edges(self, cap: int):
        m = int(self._g[K.G_N_LINKS])
        old = getattr(self, "_eu", None)
        eu = np.zeros(cap, dtype=np.int64)
        ev = np.zeros(cap, dtype=np.int64)
        ew = np.zeros(cap)
        lt = np.zeros(cap, dtype=np.int64)
        ga = np.zeros(cap, dtype=np.int64)
        if old is not None:
            eu[:m], ev[:m], ew[:m] = self._eu[:m], self._ev[:m], self._ew[:m]
            lt[:m], ga[:m] = self._link_time[:m], self._giant_after[:m]
        self._eu, self._ev, self._ew = eu, ev, ew
        self._link_time, self._giant_after = lt, ga
        hcap = 1 << (2 * cap - 1).bit_length()
        self._hkeys = np.full(hcap, -1, dtype=np.int64)
        self._hedge = np.zeros(hcap, dtype=np.int64)
        K.rehash(self._hkeys, self._hedge, self._eu, self._ev, m, self.n)

    def _grow_capacity(self):
        cap = len(self._eu)
        if cap >= self.max_links:
            raise RuntimeError("edge storage already holds every possible pair")
        self._alloc_edges(min(self.max_links, 2 * cap))

    # -- mutation ----------------------------------------------------------

    def record_trade(self, event) -> LinkOutcome:
        """Register one trade (anything with ``i``, ``j`` and ``invested``)."""
        i, j = int(event.i), int(event.j)
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise InvalidParameterError(f"node index out of range: ({i}, {j})")
        if i == j:
            raise InvalidParameterError("self-links are not allowed")
        if self.n_links >= len(self._eu):
            self._grow_capacity()
        self._g[K.G_CLOCK] += 1
        new = K.record(i, j, float(event.invested), self.n, self._g, self._hkeys, self._hedge,
                       self._eu, self._ev, self._ew, self._deg, self._strength, self._parent,
                       self._csize, self._link_time, self._giant_after)
        return LinkOutcome.NEW_LINK if new else LinkOutcome.EXISTING_LINK

    # -- queries -----------------------------------------------------------

    @property
    def n_links(self) -> int:
        return int(self._g[K.G_N_LINKS])

    @property
    def trade_clock(self) -> int:
        """Trades recorded since the graph was created."""
        return int(self._g[K.G_CLOCK])

    @property
    def largest_component(self) -> int:
        return int(self._g[K.G_LARGEST])

    def edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        m = self.n_links
        return self._eu[:m].copy(), self._ev[:m].copy(), self._ew[:m].copy()

    def weight(self, i: int, j: int) -> float:
        a, b = min(i, j), max(i, j)
        s = K._slot(self._hkeys, a * self.n + b)
        if self._hkeys[s] != a * self.n + b:
            return 0.0
        return float(self._ew[self._hedge[s]])

    def has_link(self, i: int, j: int) -> bool:
        a, b = min(i, j), max(i, j)
        return bool(self._hkeys[K._slot(self._hkeys, a * self.n + b)] == a * self.n + b)

    def link_density(self) -> float:
        return self.n_links / self.max_links

    def mean_degree(self) -> float:
        return 2.0 * self.n_links / self.n

    def giant_component_fraction(self) -> float:
        return self.largest_component / self.n

    def is_connected(self) -> bool:
        return self.largest_component == self.n

    def is_clique(self) -> bool:
        return self.n_links == self.max_links

    def degree_sequence(self) -> np.ndarray:
        return self._deg.copy()

    def strength_sequence(self) -> np.ndarray:
        return self._strength.copy()

    def component_sizes(self) -> np.ndarray:
        roots = np.array([K.uf_find(self._parent, a) for a in range(self.n)])
        return np.bincount(roots, minlength=self.n)[np.unique(roots)]

    def link_trace(self) -> tuple[np.ndarray, np.ndarray]:
        """(trade clock at creation, largest component after) per link in order."""
        m = self.n_links
        return self._link_time[:m].copy(), self._giant_after[:m].copy()

    def growth_times(self, require_clique: bool = False) -> GrowthTimes:
        t1 = int(self._g[K.G_T_SINGLE])
        t2 = int(self._g[K.G_T_CLIQUE])
        if require_clique and t2 < 0:
            raise CliqueUnavailableError(
                f"graph holds {self.n_links} of {self.max_links} links; clique time unavailable")
        return GrowthTimes(t1 if t1 >= 0 else None, t2 if t2 >= 0 else None)

    # -- export ------------------------------------------------------------

    def to_edge_list(self) -> str:
        u, v, w = self.edges()
        order = np.lexsort((v, u))
        return "".join(f"{u[e]} {v[e]} {w[e]:.17g}\n" for e in order)

    def write_edges(self, path) -> None:
        Path(path).write_text(self.to_edge_list())


def growth_times(graph: TradeGraph, require_clique: bool = True) -> GrowthTimes:
    return graph.growth_times(require_clique=require_clique)


def read_edge_list(text: str, n: int) -> TradeGraph:
    """Rebuild a graph from the ``i j w`` export (each link becomes one trade)."""
    g = TradeGraph(n)
    for line in text.splitlines():
        if not line.strip():
            continue
        a, b, w = line.split()
        g.record_trade(_Edge(int(a), int(b), float(w)))
    return g


@dataclass(frozen=True)
class _Edge:
    i: int
    j: int
    invested: float
