import math

import numpy as np
import pytest

from tailtree.errors import EstimationError
from tailtree.margins import (
    GpdFit,
    HybridTailCdf,
    decluster,
    empirical_quantile,
    fit_margin,
    gpd_cdf,
    gpd_fit_mle,
    mean_residual_life,
    tail_prob,
)


# --------------------------------------------------------------------------
# declustering


def test_decluster_decreasing_period():
    events = decluster([np.arange(18.0, 0.0, -1.0)], window=9, mode="univariate")
    assert [(e.window_start, e.values[0]) for e in events.events] == [(0, 18.0), (9, 9.0)]


def test_decluster_constant_series_earliest_ties():
    events = decluster([np.full(27, 5.0)], window=9, mode="univariate")
    starts = sorted(e.window_start for e in events.events)
    assert starts == [0, 9, 18]
    assert all(e.values[0] == 5.0 for e in events.events)
    assert len(events) == 27 // 9


def test_decluster_short_period_yields_nothing():
    assert len(decluster([np.arange(8.0)], window=9, mode="univariate")) == 0


def test_decluster_skips_empty_period():
    events = decluster([np.zeros(0), np.arange(10.0)], window=9, mode="univariate")
    assert len(events) == 1 and events.events[0].period == 1


def test_decluster_multivariate_takes_componentwise_maxima():
    rng = np.random.default_rng(0)
    period = rng.random((20, 3))
    events = decluster([period], window=9, mode="multivariate")
    for e in events.events:
        block = period[e.window_start : e.window_start + 9]
        assert np.allclose(e.values, block.max(axis=0))


def test_decluster_windows_are_disjoint_full_blocks():
    rng = np.random.default_rng(1)
    for trial in range(20):
        n_days = int(rng.integers(9, 120))
        period = rng.random((n_days, 2))
        events = decluster([period], window=9).events
        starts = sorted(e.window_start for e in events)
        assert all(b - a >= 9 for a, b in zip(starts, starts[1:]))
        assert len(events) <= math.ceil(n_days / 9)
        for e in events:
            assert 0 <= e.window_start <= n_days - 9
            assert e.window_start <= e.peak_day < e.window_start + 9


def test_decluster_univariate_rejects_matrix():
    with pytest.raises(ValueError):
        decluster([np.ones((12, 2))], mode="univariate")
    with pytest.raises(ValueError):
        decluster([np.ones(12)], window=0)
    with pytest.raises(ValueError):
        decluster([np.ones(12)], mode="blockwise")


# --------------------------------------------------------------------------
# quantiles


def test_quantile_order_statistics():
    assert empirical_quantile(np.arange(1.0, 11.0), 0.9) == 9.0
    assert empirical_quantile(np.arange(1.0, 101.0), 0.95) == 95.0
    assert empirical_quantile([7.7], 0.3) == 7.7
    assert empirical_quantile([7.7], 0.99) == 7.7


def test_quantile_validates_p():
    with pytest.raises(ValueError):
        empirical_quantile([1.0, 2.0], 0.0)
    with pytest.raises(ValueError):
        empirical_quantile([1.0, 2.0], 1.0)


# --------------------------------------------------------------------------
# GPD fitting


def test_gpd_recovers_exponential(rng):
    sigma, shape, diag = gpd_fit_mle(rng.exponential(size=10_000))
    assert abs(shape) < 0.05
    assert abs(sigma - 1.0) < 0.05
    assert diag.converged and diag.n_excesses == 10_000


def test_gpd_recovers_heavy_tail(rng):
    u = rng.random(10_000)
    z = 2.0 / 0.2 * ((1 - u) ** -0.2 - 1.0)
    sigma, shape, _ = gpd_fit_mle(z)
    assert abs(sigma - 2.0) < 0.1
    assert abs(shape - 0.2) < 0.05


def test_gpd_recovers_bounded_tail(rng):
    # shape -0.3: support bounded at sigma/0.3
    u = rng.random(10_000)
    z = 1.0 / -0.3 * ((1 - u) ** 0.3 - 1.0)
    sigma, shape, _ = gpd_fit_mle(z)
    assert abs(shape + 0.3) < 0.07
    assert abs(sigma - 1.0) < 0.1


def test_gpd_rejects_degenerate_inputs():
    with pytest.raises(ValueError):
        gpd_fit_mle(np.ones(5))  # too few
    with pytest.raises(ValueError):
        gpd_fit_mle(np.concatenate([np.ones(20), [-1.0]]))
    with pytest.raises(EstimationError):
        gpd_fit_mle(np.ones(50))


def test_gpd_local_optimality_smoke(rng):
    z = rng.exponential(size=2_000)
    sigma, shape, diag = gpd_fit_mle(z)

    def loglik(s, x):
        if s <= 0:
            return -np.inf
        if abs(x) < 1e-12:
            return float(-z.size * np.log(s) - z.sum() / s)
        arg = 1.0 + x * z / s
        if np.any(arg <= 0):
            return -np.inf
        return float(-z.size * np.log(s) - (1 + 1 / x) * np.log(arg).sum())

    best = loglik(sigma, shape)
    assert best == pytest.approx(diag.loglik, rel=1e-9)
    for _ in range(50):
        s = sigma * rng.uniform(0.5, 2.0)
        x = rng.uniform(-0.5, 2.0)
        assert loglik(s, x) <= best + 1e-6


# --------------------------------------------------------------------------
# tail probabilities


def test_tail_prob_at_threshold_is_exceed_fraction():
    fit = GpdFit(threshold=5.0, exceed_fraction=0.25, sigma=2.0, shape=0.1)
    assert tail_prob(fit, 5.0) == pytest.approx(0.25)


def test_tail_prob_exponential_half_life():
    fit = GpdFit(threshold=5.0, exceed_fraction=0.2, sigma=2.0, shape=0.0)
    assert tail_prob(fit, 5.0 + 2.0 * math.log(2.0)) == pytest.approx(0.1)


def test_tail_prob_below_threshold_rejected():
    fit = GpdFit(threshold=5.0, exceed_fraction=0.2, sigma=2.0, shape=0.0)
    with pytest.raises(ValueError):
        tail_prob(fit, 4.999)


def test_tail_prob_strictly_decreasing(rng):
    vals = rng.exponential(size=3_000)
    fit, _ = fit_margin(vals, 0.9)
    xs = np.linspace(fit.threshold, fit.threshold + 8.0, 60)
    probs = [tail_prob(fit, float(x)) for x in xs]
    assert all(b < a for a, b in zip(probs, probs[1:]))


def test_hybrid_cdf_continuity_and_monotonicity(rng):
    vals = rng.exponential(size=2_000)
    fit, _ = fit_margin(vals, 0.9)
    h = HybridTailCdf(vals, fit)
    q = fit.threshold
    empirical_at_q = np.count_nonzero(vals <= q) / vals.size
    assert h.cdf(q) == pytest.approx(empirical_at_q)
    assert h.cdf(q) == pytest.approx(1.0 - fit.exceed_fraction)
    xs = np.linspace(vals.min() - 1, vals.max() + 5, 200)
    cds = [h.cdf(float(x)) for x in xs]
    assert all(b >= a for a, b in zip(cds, cds[1:]))
    assert cds[0] == 0.0 and cds[-1] <= 1.0


def test_gpd_cdf_support_clamp():
    # negative shape: cdf reaches 1 at -sigma/shape and stays there
    assert gpd_cdf(100.0, sigma=1.0, shape=-0.5) == 1.0
    assert gpd_cdf(0.0, sigma=1.0, shape=0.3) == 0.0


def test_fit_margin_exceed_fraction_counts_strict_exceedances(rng):
    vals = rng.exponential(size=1_000)
    fit, _ = fit_margin(vals, 0.9)
    assert fit.exceed_fraction == pytest.approx(np.count_nonzero(vals > fit.threshold) / 1_000)


def test_mean_residual_life_rows(rng):
    vals = rng.exponential(size=500)
    rows = mean_residual_life(vals, (0.8, 0.9))
    assert [r["p"] for r in rows] == [0.8, 0.9]
    assert all(r["n_excesses"] > 0 for r in rows)


def test_gpd_fit_round_trip_dict():
    fit = GpdFit(2.0, 0.5, 1.5, -0.1)
    assert GpdFit.from_dict(fit.to_dict()) == fit
