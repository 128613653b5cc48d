"""Compiled inner loops: weighted selection, the exchange rule and link recording.

Everything here works on plain numpy arrays so the Python classes in
``exchange`` and ``network`` stay the single owners of state.  The random
stream is a ``numpy.random.Generator`` passed straight into numba, which
advances the same bit generator numpy does; a draw made here is the draw
numpy would have made.

Random-number consumption per trade (shared with the pure-Python path):
one ``random()`` for the first pick unless it is an argmax pick, one for
the second pick under the same rule, then one for the division fraction.
"""

from __future__ import annotations

import numba
import numpy as np

UNIFORM = 0
POWER = 1
ARGMAX = 2

# grow() / run_trades() status codes
STOP_REACHED = 0
BUDGET_EXHAUSTED = 1
EDGES_FULL = 2
DEGENERATE = 3

# istate slots
_I_SINCE_REBUILD = 0
_I_REBUILD_EVERY = 1
_I_SEG_SIZE = 2
_I_TOPBIT = 3
_I_MODE_A = 4
_I_MODE_B = 5
_I_SHARED = 6

# gstate slots
G_N_LINKS = 0
G_LARGEST = 1
G_CLOCK = 2
G_T_SINGLE = 3
G_T_CLIQUE = 4

_GOLDEN = np.uint64(11400714819323198485)

# No kernel allocates, so the runtime's atomic refcounting on every array
# binding is pure overhead (it dominated the cost of a trade); switch it off.
jit = numba.njit(cache=True, nogil=True, _nrt=False)
inline = numba.njit(cache=True, nogil=True, _nrt=False, inline="always")


@inline
def weight(xv, expo, log_ref):
    if xv <= 0.0:
        return 0.0
    if expo == 1.0:
        return xv * np.exp(-log_ref)
    if expo == 2.0:
        r = xv * np.exp(-log_ref)
        return r * r
    return np.exp(expo * (np.log(xv) - log_ref))


# -- Fenwick tree over selection weights (1-based internal layout) ----------

@jit
def fen_build(tree, w):
    n = w.shape[0]
    tree[0] = 0.0
    for k in range(n):
        tree[k + 1] = w[k]
    for k in range(1, n + 1):
        p = k + (k & -k)
        if p <= n:
            tree[p] += tree[k]


@inline
def fen_add(tree, i0, delta):
    n = tree.shape[0] - 1
    k = i0 + 1
    while k <= n:
        tree[k] += delta
        k += k & -k


@inline
def fen_prefix(tree, count):
    s = 0.0
    k = count
    while k > 0:
        s += tree[k]
        k -= k & -k
    return s


@inline
def fen_find(tree, topbit, r):
    """Number of leading elements whose cumulative weight is <= r."""
    n = tree.shape[0] - 1
    pos = 0
    step = topbit
    while step > 0:
        nxt = pos + step
        if nxt <= n and tree[nxt] <= r:
            pos = nxt
            r -= tree[nxt]
        step >>= 1
    return pos


@jit
def linear_pick(w, u, excl):
    n = w.shape[0]
    s = 0.0
    for k in range(n):
        if k != excl:
            s += w[k]
    if s <= 0.0:
        return -1
    r = u * s
    acc = 0.0
    last = -1
    for k in range(n):
        if k == excl or w[k] <= 0.0:
            continue
        acc += w[k]
        last = k
        if acc > r:
            return k
    return last


@inline
def pick_power(w, tree, topbit, u, excl):
    n = w.shape[0]
    total = fen_prefix(tree, n)
    if excl < 0:
        if total <= 0.0:
            return linear_pick(w, u, excl)
        j = fen_find(tree, topbit, u * total)
    else:
        rest = total - w[excl]
        if not rest > 1e-9 * total:
            # cancellation would swamp the tree; fall back to exact sums
            return linear_pick(w, u, excl)
        r = u * rest
        if r < fen_prefix(tree, excl):
            j = fen_find(tree, topbit, r)
        else:
            j = fen_find(tree, topbit, r + w[excl])
    if j >= n or j == excl or w[j] <= 0.0:
        return linear_pick(w, u, excl)
    return j


# -- max segment tree for infinite exponents --------------------------------

@inline
def _better(a, b, x):
    if a < 0:
        return b
    if b < 0:
        return a
    if x[a] > x[b]:
        return a
    if x[b] > x[a]:
        return b
    return a if a < b else b


@jit
def seg_build(seg, x):
    size = seg.shape[0] // 2
    n = x.shape[0]
    for k in range(size):
        seg[size + k] = k if k < n else -1
    for p in range(size - 1, 0, -1):
        seg[p] = _better(seg[2 * p], seg[2 * p + 1], x)


@inline
def seg_update(seg, x, i):
    size = seg.shape[0] // 2
    p = (size + i) >> 1
    while p >= 1:
        seg[p] = _better(seg[2 * p], seg[2 * p + 1], x)
        p >>= 1


@inline
def seg_best_excluding(seg, x, excl):
    size = seg.shape[0] // 2
    if excl < 0:
        return seg[1]
    best = -1
    p = size + excl
    while p > 1:
        best = _better(best, seg[p ^ 1], x)
        p >>= 1
    return best


# -- selector maintenance ---------------------------------------------------

@jit
def rebuild(x, fparams, istate, wa, ta, wb, tb, seg):
    alpha = fparams[0]
    beta = fparams[1]
    log_ref = fparams[2]
    n = x.shape[0]
    if istate[_I_MODE_A] == POWER:
        for k in range(n):
            wa[k] = weight(x[k], alpha, log_ref)
        fen_build(ta, wa)
    if istate[_I_MODE_B] == POWER and istate[_I_SHARED] == 0:
        for k in range(n):
            wb[k] = weight(x[k], beta, log_ref)
        fen_build(tb, wb)
    if istate[_I_MODE_A] == ARGMAX or istate[_I_MODE_B] == ARGMAX:
        seg_build(seg, x)
    istate[_I_SINCE_REBUILD] = 0


@inline
def _refresh(x, fparams, istate, wa, ta, wb, tb, seg, i):
    if istate[_I_MODE_A] == POWER:
        v = weight(x[i], fparams[0], fparams[2])
        fen_add(ta, i, v - wa[i])
        wa[i] = v
    if istate[_I_MODE_B] == POWER and istate[_I_SHARED] == 0:
        v = weight(x[i], fparams[1], fparams[2])
        fen_add(tb, i, v - wb[i])
        wb[i] = v
    if istate[_I_MODE_A] == ARGMAX or istate[_I_MODE_B] == ARGMAX:
        seg_update(seg, x, i)


@inline
def _pick(mode, w, tree, seg, x, topbit, excl, rng):
    n = x.shape[0]
    if mode == ARGMAX:
        return seg_best_excluding(seg, x, excl)
    u = rng.random()
    if mode == UNIFORM:
        if excl < 0:
            k = int(u * n)
            return k if k < n else n - 1
        k = int(u * (n - 1))
        if k >= n - 1:
            k = n - 2
        return k + 1 if k >= excl else k
    return pick_power(w, tree, topbit, u, excl)


@inline
def select(x, istate, wa, ta, wb, tb, seg, rng):
    topbit = istate[_I_TOPBIT]
    i = _pick(istate[_I_MODE_A], wa, ta, seg, x, topbit, -1, rng)
    if i < 0:
        return -1, -1
    j = _pick(istate[_I_MODE_B], wb, tb, seg, x, topbit, i, rng)
    return i, j


@inline
def exchange(x, lam, i, j, rng):
    """Apply one bipartite trade in place; returns (invested, epsilon)."""
    xi = x[i]
    xj = x[j]
    invested = (1.0 - lam[i]) * xi + (1.0 - lam[j]) * xj
    eps = rng.random()
    x[i] = lam[i] * xi + eps * invested
    x[j] = lam[j] * xj + (1.0 - eps) * invested
    return invested, eps


@inline
def _after_trade(x, fparams, istate, wa, ta, wb, tb, seg, i, j):
    istate[_I_SINCE_REBUILD] += 1
    if istate[_I_SINCE_REBUILD] >= istate[_I_REBUILD_EVERY]:
        rebuild(x, fparams, istate, wa, ta, wb, tb, seg)
    else:
        _refresh(x, fparams, istate, wa, ta, wb, tb, seg, i)
        _refresh(x, fparams, istate, wa, ta, wb, tb, seg, j)


@jit
def run_trades(x, lam, fparams, istate, wa, ta, wb, tb, seg, rng, n_trades):
    """Run up to ``n_trades`` trades. Returns (status, trades_done)."""
    for done in range(n_trades):
        i, j = select(x, istate, wa, ta, wb, tb, seg, rng)
        if i < 0 or j < 0:
            return DEGENERATE, done
        exchange(x, lam, i, j, rng)
        _after_trade(x, fparams, istate, wa, ta, wb, tb, seg, i, j)
    return BUDGET_EXHAUSTED, n_trades


# -- trade graph ------------------------------------------------------------

@inline
def _slot(hkeys, key):
    mask = hkeys.shape[0] - 1
    h = (np.uint64(key) * _GOLDEN) >> np.uint64(32)
    s = np.int64(h & np.uint64(mask))
    while True:
        k = hkeys[s]
        if k == key or k == -1:
            return s
        s = (s + 1) & mask


@inline
def uf_find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


@inline
def record(i, j, invested, n, gstate, hkeys, hedge, eu, ev, ew, deg, strength,
           parent, csize, link_time, giant_after):
    """Add one trade to the graph. Returns 1 for a new link, 0 otherwise."""
    a = i if i < j else j
    b = j if i < j else i
    key = np.int64(a) * n + b
    s = _slot(hkeys, key)
    strength[a] += invested
    strength[b] += invested
    if hkeys[s] == key:
        ew[hedge[s]] += invested
        return 0
    e = gstate[G_N_LINKS]
    hkeys[s] = key
    hedge[s] = e
    eu[e] = a
    ev[e] = b
    ew[e] = invested
    deg[a] += 1
    deg[b] += 1
    gstate[G_N_LINKS] = e + 1
    ra = uf_find(parent, a)
    rb = uf_find(parent, b)
    if ra != rb:
        if csize[ra] < csize[rb]:
            ra, rb = rb, ra
        parent[rb] = ra
        csize[ra] += csize[rb]
        if csize[ra] > gstate[G_LARGEST]:
            gstate[G_LARGEST] = csize[ra]
    link_time[e] = gstate[G_CLOCK]
    giant_after[e] = gstate[G_LARGEST]
    if gstate[G_T_SINGLE] < 0 and gstate[G_LARGEST] == n:
        gstate[G_T_SINGLE] = gstate[G_CLOCK]
    if gstate[G_T_CLIQUE] < 0 and e + 1 == n * (n - 1) // 2:
        gstate[G_T_CLIQUE] = gstate[G_CLOCK]
    return 1


@jit
def grow(x, lam, fparams, istate, wa, ta, wb, tb, seg, rng,
         gstate, hkeys, hedge, eu, ev, ew, deg, strength, parent, csize,
         link_time, giant_after, stop_links, stop_single, max_trades):
    """Trade and record links until a stop rule fires.

    Returns (status, trades_done).  ``EDGES_FULL`` asks the caller to enlarge
    the edge storage and call again.
    """
    n = x.shape[0]
    cap = eu.shape[0]
    done = 0
    while True:
        if gstate[G_N_LINKS] >= stop_links:
            return STOP_REACHED, done
        if stop_single and gstate[G_LARGEST] == n:
            return STOP_REACHED, done
        if done >= max_trades:
            return BUDGET_EXHAUSTED, done
        if gstate[G_N_LINKS] >= cap:
            return EDGES_FULL, done
        i, j = select(x, istate, wa, ta, wb, tb, seg, rng)
        if i < 0 or j < 0:
            return DEGENERATE, done
        invested, eps = exchange(x, lam, i, j, rng)
        _after_trade(x, fparams, istate, wa, ta, wb, tb, seg, i, j)
        done += 1
        gstate[G_CLOCK] += 1
        record(i, j, invested, n, gstate, hkeys, hedge, eu, ev, ew, deg,
               strength, parent, csize, link_time, giant_after)


@jit
def rehash(hkeys, hedge, eu, ev, n_links, n):
    for s in range(hkeys.shape[0]):
        hkeys[s] = -1
    for e in range(n_links):
        key = np.int64(eu[e]) * n + ev[e]
        s = _slot(hkeys, key)
        hkeys[s] = key
        hedge[s] = e
