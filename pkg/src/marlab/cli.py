"""
Command-line front end.

Subcommands: detrend, fit, forecast, mc, cobubble. Outputs are CSV/JSON
files with full double precision; every stochastic command takes --seed
and reproduces byte-identical files for a fixed seed and any --threads.

Exit codes: 0 ok, 2 usage, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import cobubble as cob
from . import montecarlo as mc
from .detrend import TrendSpec, detrend
from .errors import DataError, EstimationError
from .forecast import ForecastConfig
from .mar import estimate, identify
from .pipeline import PipelineConfig, result_to_json, run_pipeline
from .series import load_csv


def _parse_breaks(text: str) -> tuple:
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise DataError(f"cannot parse break list {text!r}") from None


def _trend_from_args(args) -> TrendSpec:
    if args.method == "hp":
        if args.hp_lambda is None or args.hp_lambda < 0:
            raise DataError("hp needs --lambda >= 0")
        return TrendSpec.hp(args.hp_lambda)
    if args.method == "poly":
        if args.order is None:
            raise DataError("poly needs --order")
        return TrendSpec.polynomial(args.order)
    if args.method == "breaks":
        if not args.breaks:
            raise DataError("breaks needs --breaks i,j,...")
        return TrendSpec.with_breaks(_parse_breaks(args.breaks), step=args.step)
    return TrendSpec.intercept()


def _load_series(args, path_attr="input", col_attr="value_column",
                 date_attr="date_column"):
    return load_csv(getattr(args, path_attr), getattr(args, col_attr),
                    getattr(args, date_attr, None))


def cmd_detrend(args) -> int:
    series = _load_series(args)
    fit = detrend(series, _trend_from_args(args))
    fit.to_frame().to_csv(f"{args.output_prefix}.csv", index=False)
    with open(f"{args.output_prefix}.json", "w") as fh:
        json.dump(fit.to_dict(), fh, indent=2, sort_keys=True)
    print(f"wrote {args.output_prefix}.csv and .json")
    return 0


def cmd_fit(args) -> int:
    series = _load_series(args)
    if args.orders:
        try:
            r, s = (int(tok) for tok in args.orders.split(","))
        except ValueError:
            raise DataError("--orders must be r,s") from None
        fit = estimate(series, r, s, dist_kind=args.dist, starts=args.starts)
    else:
        fit = identify(series, p_max=args.pmax, dist_kind=args.dist,
                       starts=args.starts)
    with open(args.output, "w") as fh:
        json.dump(fit.to_dict(), fh, indent=2, sort_keys=True)
    if args.residuals_csv:
        import pandas as pd
        n_eps = fit.residuals.size
        pd.DataFrame({
            "t": np.arange(fit.r + 1, fit.r + 1 + fit.u_path.size),
            "u": fit.u_path,
            "eps": np.concatenate([fit.residuals, np.full(fit.u_path.size - n_eps,
                                                          np.nan)]),
        }).to_csv(args.residuals_csv, index=False)
    print(f"MAR({fit.r},{fit.s}) loglik {fit.loglik:.3f} -> {args.output}")
    return 0


def cmd_forecast(args) -> int:
    try:
        with open(args.config) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise DataError(f"no such config: {args.config}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"bad config JSON: {exc}") from None
    overrides = {}
    if args.mode:
        overrides["mode"] = args.mode
    cfg = PipelineConfig.from_dict(doc, **overrides)
    if args.seed is not None:
        fc = cfg.forecast
        cfg = PipelineConfig(**{**cfg.__dict__,
                                "forecast": ForecastConfig(fc.M, fc.N, fc.grid_points,
                                                           fc.grid_span, args.seed)})
    result = run_pipeline(cfg)
    prefix = args.output_prefix
    with open(f"{prefix}_probabilities.json", "w") as fh:
        fh.write(result_to_json(result))
    import pandas as pd
    from .pipeline import probability_records
    pd.DataFrame(probability_records(result)).to_csv(
        f"{prefix}_probabilities.csv", index=False)
    for month, entry in result["months"].items():
        for method in ("sample", "simulations"):
            entry[method]["density"].to_frame().to_csv(
                f"{prefix}_density_{month}_{method}.csv", index=False)
    print(f"wrote {prefix}_probabilities.json/.csv and per-month densities")
    return 0


def cmd_mc(args) -> int:
    if args.write_trend_file:
        if not args.input:
            raise DataError("--write-trend-file needs --input")
        series = _load_series(args)
        breaks = _parse_breaks(args.breaks) if args.breaks else ()
        doc = {"label": f"fitted on {args.input}",
               "basis": "regressors on time scaled to [0,1]",
               "trends": {}}
        for name, spec in (("tau4", TrendSpec.polynomial(4)),
                           ("tau6", TrendSpec.polynomial(6))):
            doc["trends"][name] = {"method": "polynomial", "order": spec.order,
                                   "coefficients": list(map(float,
                                       detrend(series, spec).coefficients))}
        if breaks:
            doc["trends"]["breaks"] = {
                "method": "breaks", "breaks": list(breaks), "step": False,
                "coefficients": list(map(float,
                    detrend(series, TrendSpec.with_breaks(breaks)).coefficients))}
        with open(args.write_trend_file, "w") as fh:
            json.dump(doc, fh, indent=2)
        print(f"wrote {args.write_trend_file}")
        return 0

    config = mc.default_paper_config(trend_file=args.trend_file,
                                     replications=args.reps, T=args.t,
                                     master_seed=args.seed or 0,
                                     n_jobs=args.threads)
    tables = set(args.tables.split(","))
    unknown = tables - {"mse", "ident", "coeffs"}
    if unknown:
        raise DataError(f"unknown tables: {sorted(unknown)}")
    prefix = args.output_prefix
    mse_tab = ident_tab = coeff_tab = None
    if "mse" in tables:
        mse_tab = mc.run_mse(config)
        mse_tab.to_csv(f"{prefix}_mse.csv")
    if "ident" in tables:
        ident_tab = mc.run_identification(config)
        ident_tab.to_csv(f"{prefix}_identification.csv")
    if "coeffs" in tables:
        coeff_tab = mc.run_coefficients(config)
        with open(f"{prefix}_coefficients.json", "w") as fh:
            json.dump(coeff_tab, fh, indent=2, sort_keys=True)
    with open(f"{prefix}_report.json", "w") as fh:
        fh.write(mc.report_to_json(mse_tab, ident_tab, coeff_tab, config))
    print(f"wrote {prefix}_report.json")
    return 0


def cmd_cobubble(args) -> int:
    y = load_csv(args.input_y, args.column_y)
    x = load_csv(args.input_x, args.column_x)
    result = cob.grid_search(y, x, lo=args.lo, hi=args.hi, step=args.step,
                             p_max=args.pmax, dist_kind=args.dist)
    prefix = args.output_prefix
    result.to_frame().to_csv(f"{prefix}_grid.csv", index=False)
    with open(f"{prefix}_summary.json", "w") as fh:
        json.dump(result.to_dict(), fh, indent=2, sort_keys=True)
    print(f"delta = {result.best_delta:g} ({result.null_class}) -> "
          f"{prefix}_summary.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="marlab",
                                  description="mixed causal-noncausal "
                                              "autoregression toolkit")
    sub = top.add_subparsers(dest="command", required=True)

    def add_io(p, date=True):
        p.add_argument("--input", required=True, help="input CSV")
        p.add_argument("--value-column", required=True)
        if date:
            p.add_argument("--date-column", default=None)

    p = sub.add_parser("detrend", help="split a series into trend and cycle")
    add_io(p)
    p.add_argument("--method", required=True,
                   choices=["hp", "poly", "breaks", "intercept"])
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--lambda", dest="hp_lambda", type=float, default=None)
    p.add_argument("--breaks", default=None, help="comma-separated break times")
    p.add_argument("--step", action="store_true",
                   help="breaks as level shifts, not slope changes")
    p.add_argument("--output-prefix", required=True)
    p.set_defaults(func=cmd_detrend)

    p = sub.add_parser("fit", help="estimate a MAR model on a cycle")
    add_io(p)
    p.add_argument("--pmax", type=int, default=4)
    p.add_argument("--dist", default="student_t", choices=["student_t", "cauchy"])
    p.add_argument("--starts", type=int, default=8)
    p.add_argument("--orders", default=None,
                   help="fix r,s instead of identifying them")
    p.add_argument("--output", required=True)
    p.add_argument("--residuals-csv", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("forecast", help="ex-post or real-time crash probabilities")
    p.add_argument("--config", required=True, help="pipeline config JSON")
    p.add_argument("--mode", choices=["expost", "realtime"], default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--output-prefix", required=True)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("mc", help="detrending-impact Monte Carlo study")
    p.add_argument("--trend-file", default=None,
                   help="trend coefficient JSON (default: packaged stand-in)")
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--t", type=int, default=400)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--tables", default="mse,ident,coeffs")
    p.add_argument("--output-prefix", default="mc")
    p.add_argument("--write-trend-file", default=None,
                   help="fit tau4/tau6/breaks on --input and write them")
    p.add_argument("--input", default=None)
    p.add_argument("--value-column", default=None)
    p.add_argument("--date-column", default=None)
    p.add_argument("--breaks", default=None)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("cobubble", help="common-bubble grid search on two series")
    p.add_argument("--input-y", required=True)
    p.add_argument("--column-y", required=True)
    p.add_argument("--input-x", required=True)
    p.add_argument("--column-x", required=True)
    p.add_argument("--lo", type=float, default=-2.0)
    p.add_argument("--hi", type=float, default=2.0)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--pmax", type=int, default=4)
    p.add_argument("--dist", default="student_t", choices=["student_t", "cauchy"])
    p.add_argument("--output-prefix", required=True)
    p.set_defaults(func=cmd_cobubble)
    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except EstimationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
