"""Linear trend fitting, constant-input-density counterfactual, correlation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .series import AnnualSeries, check_aligned

log = logging.getLogger(__name__)

# Counterfactual calls that hit the degenerate constant-density fallback.
_fallback_events = 0


def counterfactual_fallback_count() -> int:
    return _fallback_events


def reset_counterfactual_fallback_count() -> None:
    global _fallback_events
    _fallback_events = 0


@dataclass
class OlsFit:
    slope: float
    intercept: float
    residuals: list[float]
    r_squared: float

    def predict(self, x: float) -> float:
        return self.slope * x + self.intercept


def ols_fit(xs, ys) -> OlsFit:
    """Ordinary least squares line through (xs, ys).

    The fitted line passes through the sample means.  R² is defined as 0 for
    a zero-variance target so it stays inside [0, 1].
    """
    xs = [float(x) for x in xs]
    ys = [float(y) for y in ys]
    if len(xs) != len(ys):
        raise ValueError("x and y must have equal lengths")
    if len(xs) < 2:
        raise ValueError("need at least two points")
    xbar = sum(xs) / len(xs)
    ybar = sum(ys) / len(ys)
    sxx = sum((x - xbar) ** 2 for x in xs)
    if sxx == 0:
        raise ValueError("all x values identical; fit is degenerate")
    sxy = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = ybar - slope * xbar
    residuals = [y - (slope * x + intercept) for x, y in zip(xs, ys)]
    ss_res = sum(r * r for r in residuals)
    ss_tot = sum((y - ybar) ** 2 for y in ys)
    r_squared = 0.0 if ss_tot == 0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return OlsFit(slope, intercept, residuals, r_squared)


def trend_slope(series: AnnualSeries) -> float:
    """Per-year slope of a least-squares time trend on an annual series."""
    return ols_fit(list(series.years), series.values).slope


def counterfactual_efficiency(e: AnnualSeries, d_in: AnnualSeries) -> AnnualSeries:
    """Efficiency series under the hypothetical of constant input density.

    Regress efficiency on input density, then replace each year's density by
    the period mean while keeping the year's residual: the counterfactual
    removes only the density-explained part, so its mean equals the observed
    mean.  A constant density makes the regression degenerate; the observed
    series is returned unchanged and the event is counted.
    """
    global _fallback_events
    check_aligned(e, d_in)
    if len(e) < 3:
        raise ValueError("need at least three years")
    dbar = sum(d_in.values) / len(d_in)
    if all(v == d_in.values[0] for v in d_in.values):
        _fallback_events += 1
        log.warning("input density is constant; counterfactual equals observed efficiency")
        return AnnualSeries(e.start_year, list(e.values), e.unit)
    fit = ols_fit(d_in.values, e.values)
    values = [ev - fit.slope * (dv - dbar) for ev, dv in zip(e.values, d_in.values)]
    return AnnualSeries(e.start_year, values, e.unit)


def pearson(x, y) -> float:
    """Pearson correlation coefficient of two equally long samples."""
    xs = [float(v) for v in x]
    ys = [float(v) for v in y]
    if len(xs) != len(ys):
        raise ValueError("series must have equal lengths")
    if len(xs) < 2:
        raise ValueError("need at least two points")
    xbar = sum(xs) / len(xs)
    ybar = sum(ys) / len(ys)
    sxx = sum((v - xbar) ** 2 for v in xs)
    syy = sum((v - ybar) ** 2 for v in ys)
    if sxx == 0 or syy == 0:
        raise ValueError("correlation undefined for zero-variance series")
    sxy = sum((a - xbar) * (b - ybar) for a, b in zip(xs, ys))
    r = sxy / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))
