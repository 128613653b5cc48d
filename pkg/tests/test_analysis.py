import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq

from tradenet.analysis import (Histogram, average_curve, collapse_score, conditional_means,
                               csv_to_table, propensity_density, fit_line, fit_power_law, fit_record,
                               fit_theta, giant_fraction_at, histogram_from_csv, histogram_to_csv,
                               lambda_wealth_curve, log_binned_histogram, optimize_collapse,
                               optimize_shift_collapse, percolation_threshold, table_to_csv)
from tradenet.analysis.histogram import integer_log_edges
from tradenet.errors import (InsufficientDataError, InvalidParameterError, NoOverlapError,
                             NotBracketedError)
from tradenet.exchange import TradeEvent
from tradenet.network import TradeGraph
from tradenet.rng import make_rng


# -- histograms -----------------------------------------------------------------

def test_histogram_constant_samples():
    h = log_binned_histogram(np.ones(50), 7)
    assert np.count_nonzero(h.counts) == 1
    assert np.sum(h.density * h.widths) == pytest.approx(1.0, abs=1e-12)


def test_histogram_two_samples_one_bin_per_decade():
    h = log_binned_histogram([1.0, 10.0], 1)
    assert h.counts.tolist() == [1, 1]
    assert h.bin_edges[0] == 1.0


def test_histogram_empty_and_zeros():
    with pytest.raises(InsufficientDataError):
        log_binned_histogram([], 5)
    h = log_binned_histogram([0.0, 0.0, 1.0, 2.0], 5)
    assert h.n_zero == 2 and h.n_samples == 2
    assert h.total_density(True).sum() == pytest.approx(h.density.sum() / 2)


@given(st.lists(st.floats(1e-6, 1e6), min_size=1, max_size=300), st.integers(1, 20),
       st.booleans())
@settings(max_examples=100, deadline=None)
def test_histogram_normalization(samples, b, discrete):
    if discrete:
        samples = [math.ceil(s) for s in samples]
    h = log_binned_histogram(samples, b, discrete=discrete)
    assert abs(np.sum(h.density * h.widths) - 1.0) < 1e-9
    assert h.counts.sum() == h.n_samples == len(samples)
    assert np.all(np.diff(h.bin_edges) > 0) and h.bin_edges[0] > 0


def test_integer_edges_distinct():
    e = integer_log_edges(1, 500, 10)
    assert np.all(np.diff(e) >= 1) and np.all(e == np.round(e)) and e[-1] > 500


def test_sampled_pareto_slope():
    rng = make_rng(0)
    u = rng.random(1_000_000)
    lo, hi = 1.0, 1e4
    x = 1.0 / (1.0 / lo - u * (1.0 / lo - 1.0 / hi))  # inverse CDF of x**-2 on [1, 1e4]
    h = log_binned_histogram(x, 10)
    f = fit_power_law(h)
    assert f.exponent == pytest.approx(2.0, abs=0.02)


def test_sampled_exponent_two_and_a_half():
    rng = make_rng(1)
    x = (1.0 - rng.random(1_000_000)) ** (-1.0 / 1.5)
    h = log_binned_histogram(x, 10)
    f = fit_power_law(h, (2.0, 300.0))
    assert f.exponent == pytest.approx(2.5, abs=0.05)


def test_noiseless_fit_is_exact():
    edges = 10.0 ** np.arange(0, 4.01, 0.1)
    c = np.sqrt(edges[:-1] * edges[1:])
    h = Histogram(edges, np.ones(c.size, dtype=np.int64), c ** -2.5, c.size)
    f = fit_power_law(h, (1.0, 1e4))
    assert abs(f.exponent - 2.5) < 1e-6 and f.stderr < 1e-9 and f.r_squared > 1 - 1e-12


def test_fit_needs_four_bins():
    edges = np.array([1.0, 2.0, 4.0, 8.0])
    h = Histogram(edges, np.ones(3, dtype=np.int64), np.ones(3), 3)
    with pytest.raises(InsufficientDataError):
        fit_power_law(h, (1.0, 8.0))


def test_fit_line_basic():
    f = fit_line([0, 1, 2, 3], [1, 3, 5, 7])
    assert f.slope == pytest.approx(2) and f.intercept == pytest.approx(1)


# -- collapse ---------------------------------------------------------------------

def family(eta, zeta, sizes=(256, 1024, 4096), gamma=2.2, pts=2000):
    out = {}
    for n in sizes:
        k = np.logspace(0, math.log10(n), pts)
        y = k / n ** zeta
        out[n] = (k, n ** -eta * y ** -gamma * np.exp(-y))
    return out


def test_exact_family_scores_zero():
    assert collapse_score(family(1.5, 0.7), 1.5, 0.7) < 1e-8


def test_wrong_eta_scores_higher():
    fam = family(1.5, 0.7)
    assert collapse_score(fam, 1.8, 0.7) > collapse_score(fam, 1.5, 0.7)


def test_optimizer_recovers_synthetic():
    res = optimize_collapse(family(1.5, 0.7), (0.5, 3.0), (0.2, 1.5))
    assert res.eta == pytest.approx(1.5, abs=0.05) and res.zeta == pytest.approx(0.7, abs=0.05)
    assert res.derived_gamma == pytest.approx(1.5 / 0.7, abs=0.1)


def test_collapse_invariances():
    fam = family(1.2, 0.6)
    shuffled = {n: fam[n] for n in (4096, 256, 1024)}
    assert collapse_score(shuffled, 1.3, 0.55) == collapse_score(fam, 1.3, 0.55)
    # every curve times a common constant: score unchanged
    scaled = {n: (k, 7.0 * p) for n, (k, p) in fam.items()}
    assert collapse_score(scaled, 1.3, 0.55) == pytest.approx(collapse_score(fam, 1.3, 0.55),
                                                             rel=1e-9)
    # curve N times N**d moves the optimum to eta - d with the same minimum
    d = 0.25
    tilted = {n: (k, p * n ** d) for n, (k, p) in fam.items()}
    assert collapse_score(tilted, 1.2 - d, 0.6) < 1e-8


def test_collapse_no_overlap():
    fam = family(1.5, 0.7, sizes=(10, 10_000), pts=10)
    with pytest.raises(NoOverlapError):
        collapse_score(fam, 1.5, 3.0)
    with pytest.raises(InsufficientDataError):
        collapse_score({256: fam[10]}, 1.0, 1.0)


def test_shift_collapse_exact():
    curves = {}
    for n in (128, 256, 512, 1024):
        rho = np.linspace(1e-4, 0.05, 4000)
        u = rho * n ** 0.88
        curves[n] = (rho, np.tanh(u))
    theta, score = optimize_shift_collapse(curves)
    assert theta == pytest.approx(0.88, abs=1e-3) and score < 1e-6


# -- percolation --------------------------------------------------------------------

def test_threshold_interpolates():
    assert percolation_threshold([(0.1, 0.4), (0.2, 0.6)]) == pytest.approx(0.15)


def test_threshold_exact_point():
    assert percolation_threshold([(0.1, 0.3), (0.2, 0.5), (0.3, 0.9)]) == 0.2


def test_threshold_not_bracketed():
    with pytest.raises(NotBracketedError):
        percolation_threshold([(0.1, 0.1), (0.2, 0.3), (0.3, 0.45)])


@given(st.lists(st.floats(0.01, 0.99), min_size=2, max_size=20).map(sorted),
       st.floats(0.0, 1.0))
def test_threshold_exact_on_piecewise_linear(levels, frac):
    ys = [0.0] + levels + [1.0]
    xs = np.cumsum(np.ones(len(ys)))
    rc = percolation_threshold(list(zip(xs, ys)))
    assert np.interp(rc, xs, ys) == pytest.approx(0.5, abs=1e-12) or ys.count(0.5) > 0


def test_theta_exact():
    th = fit_theta({n: 2.0 * n ** -0.9 for n in (128, 256, 512, 1024)})
    assert abs(th.theta - 0.9) < 1e-6
    with pytest.raises(InsufficientDataError):
        fit_theta({128: 0.1, 256: 0.05})


def test_giant_fraction_from_trace():
    g = TradeGraph(4)
    for a, b in [(0, 1), (2, 3), (1, 2)]:
        g.record_trade(TradeEvent(a, b, 1.0, 0.5))
    _, giant = g.link_trace()
    s = giant_fraction_at(giant, 4, [0.0, 1 / 6, 2 / 6, 3 / 6])
    assert s.tolist() == [0.25, 0.5, 0.5, 1.0]
    curve = average_curve([giant, giant], 4, [1 / 6, 3 / 6])
    assert curve.mean_sm.tolist() == [0.5, 1.0] and curve.threshold == pytest.approx(1 / 6)
    with pytest.raises(InsufficientDataError):
        giant_fraction_at(giant, 4, [1.0])


# -- wealth versus lambda -----------------------------------------------------------

def test_chi_exact_on_synthetic():
    lam = make_rng(1).random(5000) * 0.999
    x = lam ** 0.5 / (1 - lam)
    c = lambda_wealth_curve([(x, lam)], bins=None)
    assert abs(c.chi - 0.5) < 1e-6


def test_chi_zero_flat_product():
    lam = np.linspace(0.01, 0.99, 2000)
    x = 3.0 / (1 - lam)
    c = lambda_wealth_curve([(x, lam)], bins=20)
    assert abs(c.chi) < 1e-9
    inside = c.lambda_bins >= 0.3
    assert np.ptp(c.product[inside]) / c.product[inside].mean() < 0.1


def test_lambda_curve_reports_empty_bins():
    lam = np.concatenate([np.linspace(0.01, 0.3, 50), np.linspace(0.7, 0.99, 50)])
    c = lambda_wealth_curve([(1 / (1 - lam), lam)], bins=20, lam_max=0.99)
    assert c.excluded_bins > 0 and abs(c.chi) < 1e-9


def test_lambda_curve_shape_mismatch():
    with pytest.raises(InvalidParameterError):
        lambda_wealth_curve([(np.ones(3), np.ones(4))])


# -- theoretical density --------------------------------------------------------------

def test_propensity_density_chi_zero_is_pure_pareto():
    d = propensity_density(0.0)
    dev = np.abs(d.p * d.x ** 2 / d.normalization - 1.0)
    assert dev.max() < 1e-10


@pytest.mark.parametrize("chi", [0.15, 0.35, 0.57, 0.8])
def test_propensity_density_tail_slope(chi):
    d = propensity_density(chi, 4000)
    tail = d.x > d.x[-1] / 10
    slope = np.polyfit(np.log(d.x[tail]), np.log(d.p[tail]), 1)[0]
    assert slope == pytest.approx(-2.0, abs=0.02)


@pytest.mark.parametrize("chi", [0.0, 0.35, 0.8])
def test_propensity_density_normalization_by_quadrature(chi):
    d = propensity_density(chi, n_traders=1024)
    k, c, lam_max = d.scale, d.normalization, d.lam_max

    def density(x):
        # invert x = k lam**chi / (1 - lam) independently of the tabulation
        lam = brentq(lambda l: k * l ** chi / (1 - l) - x, 1e-300, lam_max, xtol=1e-300,
                     rtol=1e-15)
        bracket = lam ** -chi + (1 - lam) * chi * lam ** (-chi - 1) if chi else 1.0
        return c / (x ** 2 * bracket)

    # below lambda = 1e-14 the mass is of order 1e-14
    x_lo = k if chi == 0 else k * 1e-14 ** chi
    x_hi = k * lam_max ** chi / (1 - lam_max)
    total, _ = quad(lambda t: density(math.exp(t)) * math.exp(t), math.log(x_lo), math.log(x_hi),
                    limit=400, epsabs=1e-12, epsrel=1e-10)
    assert total == pytest.approx(1.0, abs=1e-6)
    mean, _ = quad(lambda t: density(math.exp(t)) * math.exp(2 * t), math.log(x_lo),
                   math.log(x_hi), limit=400)
    assert mean == pytest.approx(1.0, abs=1e-6)


def test_propensity_density_rejects_negative():
    with pytest.raises(InvalidParameterError):
        propensity_density(-0.1)


# -- conditional means ------------------------------------------------------------------

def test_iid_weights_give_linear_strength():
    rng = make_rng(5)
    n = 3000
    fitness = rng.pareto(1.5, n) + 1
    p = fitness / fitness.sum()
    g = TradeGraph(n)
    while g.n_links < 15000:
        a, b = rng.choice(n, 2, p=p)
        if a != b and not g.has_link(a, b):
            g.record_trade(TradeEvent(int(a), int(b), float(rng.random()), 0.5))
    fit = conditional_means(g.degree_sequence(), g.strength_sequence(), fitness)
    assert fit.phi == pytest.approx(1.0, abs=0.05)
    assert np.all(fit.counts >= 10)


def test_conditional_means_needs_bins():
    with pytest.raises(InsufficientDataError):
        conditional_means([1, 1, 2], [1.0, 1.0, 2.0], [1.0, 1.0, 1.0])


# -- serialization ----------------------------------------------------------------------

def test_histogram_csv_round_trip():
    x = make_rng(2).pareto(1.0, 5000) + 1
    h = log_binned_histogram(x, 10)
    back = histogram_from_csv(histogram_to_csv(h))
    np.testing.assert_array_equal(back.bin_edges, h.bin_edges)
    np.testing.assert_array_equal(back.density, h.density)
    np.testing.assert_array_equal(back.counts, h.counts)
    assert back.n_samples == h.n_samples


def test_table_round_trip_and_fit_record():
    t = {"a": np.array([1, 2, 3]), "b": np.array([0.1, 1 / 3, math.inf])}
    back = csv_to_table(table_to_csv(t))
    np.testing.assert_array_equal(back["a"], t["a"])
    np.testing.assert_array_equal(back["b"], t["b"])
    rec = fit_record(fit_theta({n: n ** -1.0 for n in (10, 20, 40)}))
    assert set(rec) == {"theta", "stderr", "intercept"}
