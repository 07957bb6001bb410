"""
Grid search for a common bubble: a weight delta such that the
combination z_t = y_t - delta * x_t loses its lead (noncausal) dynamics,
ending up white noise or purely causal. Instrument-based estimation of
delta is not available for processes with both lags and leads, hence the
grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import DataError
from .mar import FittedMar, identify
from .series import as_values


@dataclass(frozen=True)
class DeltaPoint:
    delta: float
    p: int
    r: int
    s: int
    loglik: float


@dataclass
class CoBubbleResult:
    points: list
    best_delta: float
    best_fit: FittedMar
    null_class: str              # white_noise | purely_causal | rejected

    @property
    def delta_grid(self) -> np.ndarray:
        return np.array([pt.delta for pt in self.points])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{"delta": pt.delta, "p": pt.p, "r": pt.r,
                              "s": pt.s, "loglik": pt.loglik}
                             for pt in self.points])

    def to_dict(self) -> dict:
        return {
            "best_delta": float(self.best_delta),
            "null_class": self.null_class,
            "best_fit": self.best_fit.to_dict(),
            "n_grid": len(self.points),
            "n_causal": int(sum(pt.s == 0 for pt in self.points)),
            "n_white_noise": int(sum(pt.p == 0 for pt in self.points)),
        }


def grid_search(y, x, lo: float = -2.0, hi: float = 2.0, step: float = 0.01,
                p_max: int = 4, dist_kind: str = "student_t") -> CoBubbleResult:
    """
    Identify a model for z = y - delta * x at every grid point.

    Among deltas whose identified lead order is zero the one with the
    largest log-likelihood wins; a white-noise identification (p = 0) is
    preferred over a purely causal one. If no delta kills the lead
    dynamics the null class is "rejected" and the best overall
    likelihood is reported. Estimation is deterministic, so the whole
    search is.
    """
    yv = as_values(y)
    xv = as_values(x)
    if yv.size != xv.size:
        raise DataError(f"series lengths differ: {yv.size} vs {xv.size}")
    if step <= 0 or hi <= lo:
        raise DataError("need step > 0 and hi > lo")
    n_pts = int(round((hi - lo) / step)) + 1
    grid = np.round(lo + step * np.arange(n_pts), 12)

    points = []
    fits = []
    for delta in grid:
        fit = identify(yv - delta * xv, p_max=p_max, dist_kind=dist_kind,
                       allow_zero=True)
        points.append(DeltaPoint(delta=float(delta), p=fit.p_used,
                                 r=fit.r, s=fit.s, loglik=fit.loglik))
        fits.append(fit)

    white = [i for i, pt in enumerate(points) if pt.p == 0]
    causal = [i for i, pt in enumerate(points) if pt.s == 0]
    if white:
        pool, null_class = white, "white_noise"
    elif causal:
        pool, null_class = causal, "purely_causal"
    else:
        pool, null_class = list(range(len(points))), "rejected"
    best_i = max(pool, key=lambda i: points[i].loglik)
    return CoBubbleResult(points=points, best_delta=points[best_i].delta,
                          best_fit=fits[best_i], null_class=null_class)
