import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tradenet.errors import CliqueUnavailableError, InvalidParameterError
from tradenet.exchange import Market, ModelParams, TradeEvent, generate_saving_profile, initial_wealth
from tradenet.network import LinkOutcome, TradeGraph, growth_times, read_edge_list
from tradenet.rng import make_rng


def ev(i, j, w=1.0):
    return TradeEvent(i, j, w, 0.5)


def largest_by_dfs(n, edges):
    adj = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    seen = [False] * n
    best = 0
    for s in range(n):
        if seen[s]:
            continue
        seen[s] = True
        stack, size = [s], 0
        while stack:
            u = stack.pop()
            size += 1
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        best = max(best, size)
    return best


def test_new_graph():
    g = TradeGraph(5)
    assert g.n_links == 0 and list(g.degree_sequence()) == [0] * 5
    assert g.giant_component_fraction() == pytest.approx(0.2)
    g2 = TradeGraph(2)
    assert not g2.is_clique() and not g2.is_connected()
    with pytest.raises(InvalidParameterError):
        TradeGraph(1)


def test_first_trade_creates_link():
    g = TradeGraph(4)
    assert g.record_trade(ev(0, 1, 0.5)) is LinkOutcome.NEW_LINK
    assert g.degree_sequence()[:2].tolist() == [1, 1] and g.weight(0, 1) == 0.5


def test_repeat_trades_accumulate_weight():
    g = TradeGraph(4)
    outcomes = [g.record_trade(ev(1, 0, w)) for w in (0.5, 0.25, 0.25)]
    assert outcomes == [LinkOutcome.NEW_LINK, LinkOutcome.EXISTING_LINK, LinkOutcome.EXISTING_LINK]
    assert g.weight(0, 1) == 1.0 and g.degree_sequence()[0] == 1 and g.n_links == 1
    assert g.trade_clock == 3


def test_self_link_and_range_rejected():
    g = TradeGraph(3)
    with pytest.raises(InvalidParameterError):
        g.record_trade(ev(1, 1))
    with pytest.raises(InvalidParameterError):
        g.record_trade(ev(0, 3))


def test_two_node_clique_times():
    g = TradeGraph(2)
    g.record_trade(ev(0, 1))
    assert g.is_clique() and g.is_connected()
    t = growth_times(g)
    assert t.t_single_component == 1 and t.t_clique == 1


def test_clique_time_unavailable():
    g = TradeGraph(4)
    g.record_trade(ev(0, 1))
    with pytest.raises(CliqueUnavailableError):
        growth_times(g)
    assert g.growth_times().t_single_component is None


def test_density_and_mean_degree():
    g = TradeGraph(4)
    assert g.link_density() == 0.0 and g.mean_degree() == 0.0
    for a, b in [(0, 1), (1, 2), (2, 3)]:
        g.record_trade(ev(a, b))
    assert g.link_density() == 0.5
    h = TradeGraph(4)
    h.record_trade(ev(0, 1))
    h.record_trade(ev(2, 3))
    assert h.mean_degree() == 1.0
    c = TradeGraph(5)
    for a in range(5):
        for b in range(a + 1, 5):
            c.record_trade(ev(a, b))
    assert c.mean_degree() == 4.0 and c.link_density() == 1.0
    assert c.giant_component_fraction() == 1.0


def test_giant_fraction_small_example():
    g = TradeGraph(6)
    for a, b in [(0, 1), (1, 2), (3, 4)]:
        g.record_trade(ev(a, b))
    assert g.giant_component_fraction() == 0.5
    assert sorted(g.component_sizes().tolist()) == [1, 2, 3]


def test_strengths():
    g = TradeGraph(4)
    g.record_trade(ev(0, 1, 0.5))
    assert g.strength_sequence().tolist() == [0.5, 0.5, 0.0, 0.0]
    g.record_trade(ev(0, 2, 1.0))
    g.record_trade(ev(0, 3, 2.5))
    h = TradeGraph(3)
    h.record_trade(ev(0, 1, 1.0))
    h.record_trade(ev(0, 2, 2.5))
    assert h.strength_sequence()[0] == 3.5


edge_lists = st.integers(2, 64).flatmap(lambda n: st.tuples(
    st.just(n),
    st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), st.floats(0.01, 10)),
             max_size=200)))


@given(edge_lists)
@settings(max_examples=150, deadline=None)
def test_union_find_matches_traversal(data):
    n, trades = data
    g = TradeGraph(n, capacity=2)
    seen = []
    prev_giant, prev_links = 1, 0
    weights = {}
    for a, b, w in trades:
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        before = weights.get(key, 0.0)
        g.record_trade(ev(a, b, w))
        weights[key] = before + w
        if key not in seen:
            seen.append(key)
        # monotone growth
        assert g.largest_component >= prev_giant and g.n_links >= prev_links
        assert g.weight(*key) >= before
        prev_giant, prev_links = g.largest_component, g.n_links
        assert g.largest_component == largest_by_dfs(n, seen)
    deg = g.degree_sequence()
    u, v, w = g.edges()
    assert deg.sum() == 2 * g.n_links == 2 * len(seen)
    assert np.isclose(g.strength_sequence().sum(), 2 * w.sum())
    assert np.all(u < v) and g.component_sizes().sum() == n
    for (a, b), tot in weights.items():
        assert g.has_link(a, b) and g.weight(b, a) == pytest.approx(tot)


def test_link_trace_records_growth():
    g = TradeGraph(5)
    for a, b in [(0, 1), (0, 1), (2, 3), (1, 2)]:
        g.record_trade(ev(a, b))
    times, giant = g.link_trace()
    assert times.tolist() == [1, 3, 4] and giant.tolist() == [2, 2, 4]


def test_edge_list_round_trip():
    g = TradeGraph(6)
    rng = make_rng(0)
    for _ in range(30):
        a, b = rng.choice(6, 2, replace=False)
        g.record_trade(ev(int(a), int(b), float(rng.random())))
    text = g.to_edge_list()
    for line in text.splitlines():
        i, j, w = line.split()
        assert int(i) < int(j) and float(w) == g.weight(int(i), int(j))
    h = read_edge_list(text, 6)
    assert h.to_edge_list() == text


def test_kernel_growth_matches_python_recording():
    # the compiled growth loop and record_trade build the same graph
    n = 40
    p = ModelParams(n, 1.0, 1.0)
    prof = generate_saving_profile(n, make_rng(1))
    a, b = initial_wealth(p), initial_wealth(p)
    g_fast = TradeGraph(n, capacity=4)
    Market(p, prof, a, make_rng(2)).grow(g_fast, n * (n - 1) // 2, False, 5000)
    from tradenet.exchange import select_pair, trade_step
    g_ref = TradeGraph(n)
    rng = make_rng(2)
    for _ in range(5000):
        if g_ref.is_clique():
            break
        i, j = select_pair(b, p, rng)
        g_ref.record_trade(trade_step(b, prof, i, j, rng))
    assert g_fast.to_edge_list() == g_ref.to_edge_list()
    assert g_fast.link_trace()[0].tolist() == g_ref.link_trace()[0].tolist()
    assert g_fast.growth_times() == g_ref.growth_times()
    np.testing.assert_array_equal(a.wealth, b.wealth)


def test_mean_degree_stop_is_exact():
    n = 256
    p = ModelParams(n, 1.0, 1.0)
    g = TradeGraph(n)
    Market(p, generate_saving_profile(n, make_rng(0)), initial_wealth(p), make_rng(1)).grow(
        g, n // 2, False, 10**9)
    assert g.n_links == 128 and g.mean_degree() == 1.0


def test_growth_times_ordered():
    n = 16
    p = ModelParams(n, 0.5, 0.5)
    g = TradeGraph(n)
    Market(p, generate_saving_profile(n, make_rng(3)), initial_wealth(p), make_rng(4)).grow(
        g, n * (n - 1) // 2, False, 10**9)
    t = growth_times(g)
    assert g.is_clique() and t.t_single_component <= t.t_clique == g.trade_clock
