"""
End-to-end forecasting pipelines.

Ex-post: trend and model are estimated once on the full sample, then the
frozen parameters produce one-month-ahead densities for each requested
month (using only data before that month as conditioning history).

Real time: for each requested month the trend and the model are
re-estimated on the expanding sample ending the month before, so both
the detrended level and the coefficients move with the window.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .detrend import TrendSpec, detrend
from .errors import DataError
from .forecast import (ForecastConfig, prob_events, sample_forecast,
                       simulations_forecast)
from .mar import identify
from .series import DeflationIndex, TimeSeries, deflate, empirical_sd, load_csv

MIN_WINDOW = 40    # shortest expanding window worth estimating on


@dataclass(frozen=True)
class PipelineConfig:
    series_path: str
    value_column: str
    date_column: str
    trend: TrendSpec
    months: tuple                    # monthly labels to forecast, e.g. ("2020-01", ...)
    mode: str = "expost"             # expost | realtime
    fit_end: str | None = None       # expost estimation window end; default: sample end
    dist_kind: str = "student_t"
    p_max: int = 4
    forecast: ForecastConfig = field(default_factory=ForecastConfig)
    label: str = ""
    deflate_path: str | None = None
    deflate_value_column: str = "cpi"
    deflate_date_column: str = "date"
    deflate_base: str | None = None  # default: last period of the series

    def __post_init__(self):
        if self.mode not in ("expost", "realtime"):
            raise DataError(f"unknown mode {self.mode!r}")
        if not self.months:
            raise DataError("no forecast months given")

    @classmethod
    def from_dict(cls, doc: dict, **overrides) -> "PipelineConfig":
        try:
            inp = doc["input"]
            trend = _trend_from_dict(doc["trend"])
            fcast = doc.get("forecast", {})
            window = doc["window"]
            defl = doc.get("deflate")
            kwargs = dict(
                series_path=inp["path"],
                value_column=inp["value_column"],
                date_column=inp["date_column"],
                label=inp.get("label", ""),
                trend=trend,
                months=tuple(window["months"]),
                fit_end=window.get("fit_end"),
                mode=doc.get("mode", "expost"),
                dist_kind=doc.get("dist", "student_t"),
                p_max=int(doc.get("p_max", 4)),
                forecast=ForecastConfig(
                    M=int(fcast.get("M", 100)),
                    N=int(fcast.get("N", 1_000_000)),
                    grid_points=int(fcast.get("grid_points", 1001)),
                    grid_span=float(fcast.get("grid_span", 3.0)),
                    seed=int(fcast.get("seed", 0)),
                ),
            )
            if defl:
                kwargs.update(
                    deflate_path=defl["path"],
                    deflate_value_column=defl.get("value_column", "cpi"),
                    deflate_date_column=defl.get("date_column", "date"),
                    deflate_base=defl.get("base"),
                )
        except KeyError as exc:
            raise DataError(f"pipeline config missing key: {exc}") from exc
        kwargs.update(overrides)
        return cls(**kwargs)


def _trend_from_dict(doc: dict) -> TrendSpec:
    method = doc.get("method")
    if method == "hp":
        return TrendSpec.hp(float(doc["lambda"]))
    if method in ("poly", "polynomial"):
        return TrendSpec.polynomial(int(doc["order"]))
    if method == "breaks":
        return TrendSpec.with_breaks(doc["breaks"], step=bool(doc.get("step", False)))
    if method == "intercept":
        return TrendSpec.intercept()
    raise DataError(f"unknown trend method {method!r}")


def load_input_series(cfg: PipelineConfig) -> TimeSeries:
    series = load_csv(cfg.series_path, cfg.value_column, cfg.date_column,
                      label=cfg.label or cfg.value_column)
    if cfg.deflate_path:
        idx = load_csv(cfg.deflate_path, cfg.deflate_value_column,
                       cfg.deflate_date_column)
        index = DeflationIndex(idx.values, idx.timestamps)
        base = cfg.deflate_base or str(series.timestamps[-1])
        series = deflate(series, index, base)
    return series


def _forecast_one(fit, cycle: np.ndarray, upto: int, sd: float,
                  fcfg: ForecastConfig) -> dict:
    history = cycle[:upto]
    last_y = float(cycle[upto - 1])
    dens_samp = sample_forecast(fit, history, fcfg)
    dens_sims = simulations_forecast(fit, history, 1, fcfg)
    return {
        "sample": {"density": dens_samp, **prob_events(dens_samp, last_y, sd)},
        "simulations": {"density": dens_sims, **prob_events(dens_sims, last_y, sd)},
        "last_cycle_value": last_y,
    }


def run_pipeline(cfg: PipelineConfig, series: TimeSeries | None = None) -> dict:
    """
    Returns {"label", "mode", "months": {month: {...}}, "models": {...}}.
    Each month entry holds the two densities, their event probabilities
    and the conditioning level; models holds the fitted coefficients per
    estimation window.
    """
    if series is None:
        series = load_input_series(cfg)
    if series.timestamps is None:
        raise DataError("pipelines need a dated series")
    out = {"label": series.label, "mode": cfg.mode, "months": {}, "models": {}}

    if cfg.mode == "expost":
        end = cfg.fit_end or str(series.timestamps[-1])
        sample = series.slice(series.index_of(end) + 1)
        trend_fit = detrend(sample, cfg.trend)
        cycle = trend_fit.cycle
        fit = identify(cycle, p_max=cfg.p_max, dist_kind=cfg.dist_kind)
        sd = empirical_sd(cycle)
        out["models"]["expost"] = fit.to_dict()
        out["detrended_sd"] = sd
        for month in cfg.months:
            # history runs through the month before the forecast target;
            # the first out-of-window month is still forecastable
            upto = (pd.Period(month, freq="M") - sample.timestamps[0]).n
            if upto > len(sample):
                raise DataError(f"{month} lies beyond the fitted window "
                                f"(ends {sample.timestamps[-1]})")
            if upto < MIN_WINDOW:
                raise DataError(f"not enough history before {month}")
            out["months"][month] = _forecast_one(fit, cycle, upto, sd, cfg.forecast)
    else:
        for month in cfg.months:
            upto = series.index_of(month)
            if upto < MIN_WINDOW:
                raise DataError(f"not enough history before {month}")
            window = series.slice(upto)
            trend_fit = detrend(window, cfg.trend)
            cycle = trend_fit.cycle
            fit = identify(cycle, p_max=cfg.p_max, dist_kind=cfg.dist_kind)
            sd = empirical_sd(cycle)
            out["models"][month] = fit.to_dict()
            out["months"][month] = _forecast_one(fit, cycle, len(cycle), sd,
                                                 cfg.forecast)
    return out


def probability_records(result: dict) -> list[dict]:
    """Flatten a pipeline result into one record per (month, method)."""
    records = []
    for month, entry in result["months"].items():
        for method in ("sample", "simulations"):
            records.append({
                "series": result["label"],
                "mode": result["mode"],
                "month": month,
                "method": method,
                "p_decrease": entry[method]["p_decrease"],
                "p_decrease_1sd": entry[method]["p_decrease_1sd"],
            })
    return records


def result_to_json(result: dict) -> str:
    """Probabilities and models (densities are exported separately as CSV)."""
    doc = {
        "label": result["label"],
        "mode": result["mode"],
        "detrended_sd": result.get("detrended_sd"),
        "models": result["models"],
        "probabilities": probability_records(result),
    }
    return json.dumps(doc, indent=2, sort_keys=True)
