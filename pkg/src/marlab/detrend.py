"""
Trend extraction: the observed series splits as observed = trend + cycle,
and the cycle is what gets modelled as a stationary autoregression.

Deterministic trends (intercept, polynomials, linear trends with breaks)
are fit by OLS on a time axis scaled to [0, 1] for conditioning. The
Hodrick-Prescott trend solves the exact first-order conditions
(I + lambda * D''^T D'') f = y with D'' the second-difference operator,
via a symmetric pentadiagonal banded solve, so the endpoints are handled
exactly rather than by the interior-only inverse-filter form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.linalg import solveh_banded

from .errors import DataError, EstimationError
from .series import as_values

#: rules of thumb for the HP penalty on monthly data, relative to the
#: quarterly convention 1600: (12/4)^i * 1600 with i = 2 or 4
HP_MONTHLY_LAMBDAS = {"backus_kehoe": 14_400.0, "ravn_uhlig": 129_600.0}


@dataclass(frozen=True)
class TrendSpec:
    """One trend family with its tuning parameters."""

    method: str                       # intercept | polynomial | breaks | hp
    order: int | None = None          # polynomial order k >= 0
    breaks: tuple[int, ...] = ()      # 1-based break times, strictly inside sample
    step: bool = False                # breaks as level shifts instead of slope changes
    lam: float | None = None          # HP penalty, >= 0 (0 = degenerate identity)

    def __post_init__(self):
        if self.method not in ("intercept", "polynomial", "breaks", "hp"):
            raise DataError(f"unknown trend method {self.method!r}")
        if self.method == "polynomial":
            if self.order is None or self.order < 0:
                raise DataError("polynomial trend needs order k >= 0")
        if self.method == "breaks":
            b = tuple(int(t) for t in self.breaks)
            object.__setattr__(self, "breaks", b)
            if any(b[i] >= b[i + 1] for i in range(len(b) - 1)):
                raise DataError("break times must be strictly increasing")
        if self.method == "hp":
            if self.lam is None or self.lam < 0:
                raise DataError("hp trend needs lambda >= 0")

    @classmethod
    def intercept(cls):
        return cls("intercept")

    @classmethod
    def polynomial(cls, order: int):
        return cls("polynomial", order=int(order))

    @classmethod
    def with_breaks(cls, breaks, step: bool = False):
        return cls("breaks", breaks=tuple(int(b) for b in breaks), step=step)

    @classmethod
    def hp(cls, lam: float):
        return cls("hp", lam=float(lam))

    def describe(self) -> str:
        if self.method == "polynomial":
            return f"t^{self.order}"
        if self.method == "hp":
            return f"hp({self.lam:g})"
        if self.method == "breaks":
            kind = "steps" if self.step else "breaks"
            return f"{kind}{list(self.breaks)}"
        return self.method


@dataclass(frozen=True)
class TrendFit:
    """Fitted trend and the remaining cycle; trend + cycle == input."""

    trend: np.ndarray
    cycle: np.ndarray
    spec: TrendSpec
    coefficients: np.ndarray          # OLS coefficients in the scaled basis; empty for HP

    def to_frame(self) -> pd.DataFrame:
        t = np.arange(1, len(self.trend) + 1)
        return pd.DataFrame({"t": t, "observed": self.trend + self.cycle,
                             "trend": self.trend, "cycle": self.cycle})

    def to_dict(self) -> dict:
        return {
            "method": self.spec.method,
            "order": self.spec.order,
            "breaks": list(self.spec.breaks),
            "step": self.spec.step,
            "lambda": self.spec.lam,
            "basis": "time scaled to [0,1]",
            "coefficients": [float(c) for c in self.coefficients],
        }


def _scaled_time(n: int) -> np.ndarray:
    if n == 1:
        return np.zeros(1)
    return np.arange(n, dtype=float) / (n - 1)


def design_matrix(spec: TrendSpec, n: int) -> np.ndarray:
    """Regressor matrix of a deterministic trend on a length-n sample."""
    ts = _scaled_time(n)
    if spec.method == "intercept":
        return np.ones((n, 1))
    if spec.method == "polynomial":
        return np.vander(ts, spec.order + 1, increasing=True)
    if spec.method == "breaks":
        for b in spec.breaks:
            if not 1 < b < n:
                raise DataError(f"break time {b} not strictly inside 1..{n}")
        cols = [np.ones(n), ts]
        for b in spec.breaks:
            bs = (b - 1) / (n - 1)
            if spec.step:
                cols.append((ts >= bs).astype(float))
            else:
                cols.append(np.where(ts >= bs, ts - bs, 0.0))
        return np.column_stack(cols)
    raise DataError(f"no design matrix for method {spec.method!r}")


def trend_values(spec: TrendSpec, coefficients, n: int) -> np.ndarray:
    """Evaluate a deterministic trend with known coefficients on 1..n."""
    coef = np.asarray(coefficients, dtype=float)
    X = design_matrix(spec, n)
    if X.shape[1] != coef.size:
        raise DataError(f"{spec.describe()}: expected {X.shape[1]} coefficients, "
                        f"got {coef.size}")
    return X @ coef


def _ols_fit(series, spec: TrendSpec) -> TrendFit:
    y = as_values(series)
    X = design_matrix(spec, y.size)
    if X.shape[1] > y.size:
        raise DataError("more trend regressors than observations")
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise EstimationError(f"rank-deficient trend design ({spec.describe()})")
    trend = X @ coef
    return TrendFit(trend, y - trend, spec, coef)


def fit_polynomial(series, order: int) -> TrendFit:
    """OLS polynomial trend of the given order (0 = intercept only)."""
    return _ols_fit(series, TrendSpec.polynomial(order))


def fit_breaks(series, break_times, step: bool = False) -> TrendFit:
    """
    OLS linear trend with breaks.

    By default each break changes the slope (continuous piecewise-linear
    trend); with step=True each break is a level shift on top of the
    linear trend instead.
    """
    return _ols_fit(series, TrendSpec.with_breaks(break_times, step=step))


def _hp_bands(n: int, lam: float) -> np.ndarray:
    """Upper banded form of I + lam * D''^T D'' for solveh_banded."""
    main = np.ones(n)
    off1 = np.zeros(n - 1)
    off2 = np.zeros(max(n - 2, 0))
    # D''^T D'' bands for the (n-2) x n second-difference operator
    d0 = np.zeros(n)
    d0[2:-2] = 6.0
    d0[0] = d0[-1] = 1.0
    d0[1] = d0[-2] = 5.0
    d1 = np.full(n - 1, -4.0)
    d1[0] = d1[-1] = -2.0
    d2 = np.ones(max(n - 2, 0))
    main += lam * d0
    off1 += lam * d1
    off2 += lam * d2
    ab = np.zeros((3, n))
    ab[0, 2:] = off2
    ab[1, 1:] = off1
    ab[2, :] = main
    return ab


def hp_filter(series, lam: float) -> TrendFit:
    """
    Hodrick-Prescott trend via the exact banded normal equations.

    lam = 0 degenerates to trend == series (zero cycle). Larger lam gives
    a smoother trend; the limit is the OLS line.
    """
    y = as_values(series)
    if y.size < 4:
        raise DataError("hp filter needs at least 4 observations")
    if lam < 0:
        raise DataError("lambda must be >= 0")
    trend = solveh_banded(_hp_bands(y.size, lam), y, lower=False)
    return TrendFit(trend, y - trend, TrendSpec.hp(lam), np.empty(0))


def hp_foc_residual(fit: TrendFit, series) -> float:
    """Max-norm residual of (I + lam D''^T D'') f - y, for verification."""
    y = as_values(series)
    f = fit.trend
    lam = fit.spec.lam
    d2 = np.diff(f, 2)
    # D''^T applied to the interior second differences
    back = np.zeros_like(f)
    back[:-2] += d2
    back[1:-1] += -2.0 * d2
    back[2:] += d2
    return float(np.max(np.abs(f + lam * back - y)))


def hp_lambda_for_monthly(rule: str) -> float:
    """Monthly HP penalty by named rule of thumb."""
    try:
        return HP_MONTHLY_LAMBDAS[rule]
    except KeyError:
        raise DataError(f"unknown rule {rule!r}; choose from "
                        f"{sorted(HP_MONTHLY_LAMBDAS)}") from None


def hp_lambda_for_frequency(obs_per_year: int, exponent: int) -> float:
    """General frequency adjustment of the quarterly penalty 1600."""
    return (obs_per_year / 4.0) ** exponent * 1600.0


def detrend(series, spec: TrendSpec) -> TrendFit:
    """Dispatch to the requested trend family."""
    if spec.method == "hp":
        return hp_filter(series, spec.lam)
    return _ols_fit(series, spec)
