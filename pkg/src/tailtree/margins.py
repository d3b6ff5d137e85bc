"""Univariate margins: declustering of daily series, empirical quantiles,
generalized Pareto fitting of threshold excesses, and the hybrid tail CDF."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from tailtree.errors import EstimationError


@dataclass(frozen=True)
class GpdFit:
    """Threshold, exceedance rate, and generalized Pareto tail parameters."""

    threshold: float
    exceed_fraction: float
    sigma: float
    shape: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if not (0.0 < self.exceed_fraction <= 1.0):
            raise ValueError("exceed_fraction must lie in (0, 1]")

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "exceed_fraction": self.exceed_fraction,
            "sigma": self.sigma,
            "shape": self.shape,
        }

    @staticmethod
    def from_dict(obj: dict) -> "GpdFit":
        return GpdFit(
            float(obj["threshold"]),
            float(obj["exceed_fraction"]),
            float(obj["sigma"]),
            float(obj["shape"]),
        )


@dataclass
class GpdDiagnostics:
    loglik: float
    iterations: int
    converged: bool
    n_excesses: int


@dataclass(frozen=True)
class Event:
    """One declustered event: the anchor day, its window, and per-series maxima."""

    period: int
    window_start: int
    peak_day: int
    values: tuple[float, ...]


@dataclass(frozen=True)
class EventSeries:
    window: int
    events: tuple[Event, ...]

    @property
    def values(self) -> np.ndarray:
        return np.asarray([e.values for e in self.events], dtype=float)

    def __len__(self) -> int:
        return len(self.events)


def _runs(alive: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs [start, end) of True entries."""
    out = []
    start = None
    for i, flag in enumerate(alive):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            out.append((start, i))
            start = None
    if start is not None:
        out.append((start, len(alive)))
    return out


def decluster(
    periods,
    window: int = 9,
    mode: str = "multivariate",
) -> EventSeries:
    """Greedy extraction of disjoint full-window events from daily series.

    Each period is a (days,) or (days, d) array. Within a period: rank every
    series, repeatedly take the day with the highest rank across series
    (earliest day on ties) among days lying in a stretch of at least
    ``window`` consecutive remaining days, carve out the ``window``-day block
    starting at that day (shifted back just enough to stay inside the
    stretch), record the per-series maxima over the block, and delete it.
    Extraction stops once no stretch of ``window`` consecutive days remains,
    so windows are disjoint full blocks and their start days are at least
    ``window`` apart.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if mode not in ("multivariate", "univariate"):
        raise ValueError(f"unknown mode {mode!r}")
    events: list[Event] = []
    for p_idx, period in enumerate(periods):
        arr = np.asarray(period, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if mode == "univariate" and arr.shape[1] != 1:
            raise ValueError("univariate mode expects a single series per period")
        n_days, d = arr.shape
        if n_days == 0:
            continue
        # within-series ranks (ties share a rank); the cross-series criterion
        # is the max of them, and argmax later resolves ties to the earliest day
        ranks = np.empty_like(arr)
        for j in range(d):
            col = arr[:, j]
            order = np.argsort(col, kind="stable")
            dense = np.empty(n_days, dtype=np.int64)
            dense[order] = np.arange(1, n_days + 1)
            sorted_vals = col[order]
            firsts = np.empty(n_days, dtype=np.int64)
            firsts[0] = 1
            for t in range(1, n_days):
                firsts[t] = firsts[t - 1] if sorted_vals[t] == sorted_vals[t - 1] else t + 1
            tie_min = np.empty(n_days, dtype=np.int64)
            tie_min[order] = firsts
            ranks[:, j] = tie_min
        criterion = ranks.max(axis=1)
        alive = np.ones(n_days, dtype=bool)
        while True:
            runs = [(s, e) for s, e in _runs(alive) if e - s >= window]
            if not runs:
                break
            eligible = np.zeros(n_days, dtype=bool)
            for s, e in runs:
                eligible[s:e] = True
            cand = np.nonzero(eligible)[0]
            peak = int(cand[np.argmax(criterion[cand])])
            run = next((s, e) for s, e in runs if s <= peak < e)
            start = min(peak, run[1] - window)
            block = slice(start, start + window)
            events.append(
                Event(
                    period=p_idx,
                    window_start=start,
                    peak_day=peak,
                    values=tuple(arr[block].max(axis=0).tolist()),
                )
            )
            alive[block] = False
    return EventSeries(window=window, events=tuple(events))


def empirical_quantile(values, p: float) -> float:
    """ceil(n*p)-th order statistic."""
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must lie in (0, 1), got {p}")
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError("empty sample")
    idx = max(1, math.ceil(v.size * p))
    return float(v[idx - 1])


def gpd_cdf(z, sigma: float, shape: float):
    """Generalized Pareto CDF at excess z >= 0."""
    z = np.asarray(z, dtype=float)
    if abs(shape) < 1e-12:
        out = -np.expm1(-z / sigma)
    else:
        arg = np.maximum(1.0 + shape * z / sigma, 0.0)
        out = 1.0 - arg ** (-1.0 / shape)
    return np.clip(out, 0.0, 1.0)


_SHAPE_RANGE = (-0.99, 5.0)


def gpd_fit_mle(excesses) -> tuple[float, float, GpdDiagnostics]:
    """Maximum likelihood (sigma, shape) for positive excesses.

    The likelihood is profiled on eta = shape/sigma: given eta, the shape has
    the closed form mean(log1p(eta*z)) and sigma follows, leaving a 1-d search
    (coarse scan plus Brent polish) over eta.
    """
    z = np.asarray(excesses, dtype=float)
    if z.ndim != 1 or z.size < 10:
        raise ValueError(f"need at least 10 excesses, got {z.size}")
    if np.any(z <= 0) or not np.all(np.isfinite(z)):
        raise ValueError("excesses must be positive and finite")
    if np.ptp(z) == 0.0:
        raise EstimationError(
            "all excesses are identical; the likelihood is degenerate",
            details={"value": float(z[0])},
        )
    n = z.size
    zmax = float(z.max())

    def profile(eta: float) -> float:
        # negative mean log-likelihood at the profiled (sigma, shape)
        if eta == 0.0:
            return math.log(float(z.mean())) + 1.0
        shape = float(np.mean(np.log1p(eta * z)))
        if shape == 0.0 or not (_SHAPE_RANGE[0] < shape < _SHAPE_RANGE[1]):
            return np.inf
        sigma = shape / eta
        if sigma <= 0:
            return np.inf
        return math.log(sigma) + shape + 1.0

    eta_lo = -(1.0 - 1e-9) / zmax
    grid = np.concatenate(
        (
            np.linspace(eta_lo, -1e-8 / zmax, 60),
            [0.0],
            np.geomspace(1e-6 / zmax, 1e4 / zmax, 80),
        )
    )
    vals = np.array([profile(e) for e in grid])
    i0 = int(np.argmin(vals))
    if not np.isfinite(vals[i0]):
        raise EstimationError("profile likelihood is unbounded or empty on the search range")
    lo = grid[max(0, i0 - 1)]
    hi = grid[min(len(grid) - 1, i0 + 1)]
    eta_hat, neg_mean_ll, nfev = _polish_scalar(profile, lo, hi)
    if vals[i0] < neg_mean_ll:
        eta_hat, neg_mean_ll = float(grid[i0]), float(vals[i0])
    if eta_hat == 0.0:
        sigma_hat, shape_hat = float(z.mean()), 0.0
    else:
        shape_hat = float(np.mean(np.log1p(eta_hat * z)))
        sigma_hat = shape_hat / eta_hat
    loglik = -n * neg_mean_ll
    converged = _SHAPE_RANGE[0] < shape_hat < _SHAPE_RANGE[1] and sigma_hat > 0
    if not converged:
        raise EstimationError(
            "profiled parameters left the admissible region",
            details={"sigma": sigma_hat, "shape": shape_hat},
        )
    return sigma_hat, shape_hat, GpdDiagnostics(loglik, len(grid) + nfev, True, n)


def _polish_scalar(fn, lo: float, hi: float):
    if lo == hi:
        return float(lo), float(fn(lo)), 1
    res = minimize_scalar(fn, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return float(res.x), float(res.fun), int(res.nfev)


def fit_margin(values, p: float = 0.9) -> tuple[GpdFit, GpdDiagnostics]:
    """Threshold at the empirical p-quantile, then GPD MLE on the excesses."""
    v = np.asarray(values, dtype=float)
    q = empirical_quantile(v, p)
    exc = v[v > q] - q
    sigma, shape, diag = gpd_fit_mle(exc)
    return GpdFit(q, exc.size / v.size, sigma, shape), diag


def tail_prob(fit: GpdFit, x: float) -> float:
    """Exceedance probability above the threshold: rate times GPD survival."""
    if x < fit.threshold:
        raise ValueError(
            f"x={x} is below the threshold {fit.threshold}; use the empirical part"
        )
    z = x - fit.threshold
    return float(fit.exceed_fraction * (1.0 - gpd_cdf(z, fit.sigma, fit.shape)))


class HybridTailCdf:
    """Empirical CDF below the GPD threshold, parametric tail above it.

    Continuous at the junction because the exceedance fraction is computed
    from the same sample.
    """

    def __init__(self, values, fit: GpdFit):
        self._sorted = np.sort(np.asarray(values, dtype=float))
        self.fit = fit

    def cdf(self, x: float) -> float:
        if x >= self.fit.threshold:
            return 1.0 - tail_prob(self.fit, x)
        return float(np.searchsorted(self._sorted, x, side="right")) / self._sorted.size


def mean_residual_life(values, ps) -> list[dict]:
    """Mean excess over a grid of quantile thresholds (threshold diagnostics)."""
    v = np.asarray(values, dtype=float)
    rows = []
    for p in ps:
        q = empirical_quantile(v, p)
        exc = v[v > q] - q
        rows.append(
            {
                "p": float(p),
                "threshold": q,
                "n_excesses": int(exc.size),
                "mean_excess": float(exc.mean()) if exc.size else float("nan"),
            }
        )
    return rows
