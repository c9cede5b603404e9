"""Verdicts on correlation series: exponential fits, plateaus, the
complex-translation upper bound and the magnetisation proxy."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .electrical import MSFunction

DECAY, PLATEAU, INCONCLUSIVE = "decay", "plateau", "inconclusive"


@dataclass(frozen=True)
class Thresholds:
    rate_min: float = 0.05
    r2_min: float = 0.9
    level_min: float = 0.2


@dataclass(frozen=True)
class DecayFit:
    """Least-squares line through ``(d, log estimate)``.

    ``status`` is ``"ok"``, ``"insufficient"`` (fewer than three usable
    points) or ``"degenerate"`` (flat input, r squared undefined).
    """
    rate: float
    intercept: float
    r_squared: float
    distances_used: tuple = ()
    status: str = "ok"

    @property
    def usable(self) -> bool:
        return self.status != "insufficient"


@dataclass(frozen=True)
class Verdict:
    kind: str
    rate: float = float("nan")
    r_squared: float = float("nan")
    plateau_level: float = float("nan")
    fit: DecayFit | None = field(default=None, repr=False)


def _arrays(series):
    d = np.asarray(series.distance, dtype=float)
    e = np.asarray(series.estimate, dtype=float)
    s = np.asarray(series.stderr, dtype=float)
    return d, e, s


def fit_exponential(series) -> DecayFit:
    """Fit ``estimate ~ exp(intercept - rate * d)`` over usable distances
    (d >= 1, positive estimate, relative error below one half)."""
    d, e, s = _arrays(series)
    with np.errstate(divide="ignore", invalid="ignore"):
        use = (d >= 1) & (e > 0) & (s / e < 0.5)
    used = tuple(int(x) for x in d[use])
    if use.sum() < 3:
        return DecayFit(float("nan"), float("nan"), float("nan"), used, "insufficient")
    x, y = d[use], np.log(e[use])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    scale = max(1.0, float(np.max(np.abs(y))))
    if ss_tot <= (1e-12 * scale) ** 2 * len(y):
        return DecayFit(0.0, float(y.mean()), float("nan"), used, "degenerate")
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot
    return DecayFit(max(0.0, -float(slope)), float(intercept),
                    float(min(1.0, max(0.0, r2))), used)


def classify(series, thresholds: Thresholds = Thresholds()) -> Verdict:
    """Decay when the fit is clean and steep enough; otherwise plateau when
    every tested distance stays above ``level_min`` with small errors."""
    d, e, s = _arrays(series)
    if d.max() < 4:
        raise ValueError("classification needs distances 1..D with D >= 4")
    fit = fit_exponential(series)
    tested = d >= 1
    level = float(e[tested].min())
    if (fit.status == "ok" and fit.rate > thresholds.rate_min
            and fit.r_squared >= thresholds.r2_min):
        return Verdict(DECAY, fit.rate, fit.r_squared, level, fit)
    if level >= thresholds.level_min and np.all(s[tested] < thresholds.level_min / 3):
        return Verdict(PLATEAU, fit.rate, fit.r_squared, level, fit)
    return Verdict(INCONCLUSIVE, fit.rate, fit.r_squared, level, fit)


def ms_bound(msf: MSFunction, beta: float, loss_factor: float = 1.0) -> float:
    """Upper bound on the O(2) pair correlation at ``(msf.x, msf.y)``.

    ``exp(-(a(y) - a(x)) + loss_factor * beta * sum mult * (cosh(da) - 1))``;
    ``loss_factor=2`` is the conservative variant.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    g = msf.graph
    da = msf.a[g.edge_v] - msf.a[g.edge_u]
    # cosh(x) - 1 = (e^x - 1)^2 / (2 e^x), exact near zero
    loss = np.sum(g.edge_mult * np.expm1(np.abs(da)) ** 2 / (2 * np.exp(np.abs(da))))
    return float(np.exp(-msf.gain + loss_factor * beta * loss))


def magnetisation_proxy(series, spheres) -> tuple[float, np.ndarray]:
    """``sum_d |sphere(d)| * estimate(d)`` and the per-distance products."""
    e = np.asarray(series.estimate, dtype=float)
    sizes = np.asarray(spheres, dtype=float)
    if len(e) != len(sizes):
        raise ValueError("series and sphere sizes cover different distances")
    products = sizes * e
    return float(products.sum()), products


def verdict_csv(rows) -> str:
    """``rows``: iterables of (graph, n, beta, bc, Verdict, ms_bound_at_max_d)."""
    lines = ["graph,n,beta,bc,verdict,rate,r_squared,plateau_level,ms_bound_at_max_d"]
    for graph, n, beta, bc, v, bound in rows:
        lines.append(f"{graph},{n},{beta:.10g},{bc},{v.kind},{v.rate:.10g},"
                     f"{v.r_squared:.10g},{v.plateau_level:.10g},"
                     f"{'' if bound is None else format(bound, '.10g')}")
    return "\n".join(lines) + "\n"


class DecayClassifier(BaseEstimator):
    """``fit(series)`` stores ``fit_`` and ``verdict_``; ``predict`` maps a
    list of series to verdict labels."""

    def __init__(self, rate_min=0.05, r2_min=0.9, level_min=0.2):
        self.rate_min = rate_min
        self.r2_min = r2_min
        self.level_min = level_min

    def _thresholds(self):
        return Thresholds(self.rate_min, self.r2_min, self.level_min)

    def fit(self, series, y=None):
        self.verdict_ = classify(series, self._thresholds())
        self.fit_ = self.verdict_.fit
        return self

    def predict(self, series_list):
        return np.array([classify(s, self._thresholds()).kind for s in series_list])
