"""Command-line interface.

Exit codes: 0 success, 1 validation error (bad flags, malformed files),
2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NumericalError, ValidationError
from .esda import PERMUTATIONS, as_vector, geary_c, global_moran, local_moran_lisa, moran_scatter_data
from .regression import LMTests, RegressionData, lm_diagnostics, ols_fit
from .report import (
    build_report,
    decision_entry,
    dumps_report,
    file_digest,
    ols_entry,
    render_ml_table,
    render_table,
    scatter_csv,
    spatial_entry,
)
from .spatial_ml import fit_spatial_error, fit_spatial_lag
from .spec_search import florax_select, render_trace
from .svg import render_lisa_outputs, render_moran_scatter_svg
from .verdoorn import (
    VerdoornConfig,
    compute_growth_rates,
    load_panel,
    parse_period,
    run_sector_analysis,
)
from .weights import build_weights, connectivity_report, load_weights, read_centroids, save_weights


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def read_data_table(path) -> dict[str, dict[str, float]]:
    """CSV with a ``region_id`` column -> ``{column: {region_id: value}}``."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if "region_id" not in header:
            raise ValidationError(f"{path}:1: data file needs a region_id column")
        key = header.index("region_id")
        cols = {h: {} for i, h in enumerate(header) if i != key}
        seen = set()
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValidationError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            rid = row[key].strip()
            if rid in seen:
                raise ValidationError(f"{path}:{lineno}: duplicate region_id {rid!r}")
            seen.add(rid)
            for i, h in enumerate(header):
                if i == key:
                    continue
                try:
                    cols[h][rid] = float(row[i])
                except ValueError:
                    raise ValidationError(f"{path}:{lineno}: column {h!r}: not a number: {row[i]!r}") from None
    return cols


def _column(table, name, path):
    if name not in table:
        raise ValidationError(f"{path}: no column {name!r} (have {', '.join(sorted(table))})")
    return table[name]


def _weights(args):
    if args.weights:
        return load_weights(args.weights)
    if args.centroids:
        return build_weights(read_centroids(args.centroids), cutoff_km=args.cutoff, power=args.power)
    raise UsageError("either --weights or --centroids is required")


def _add_weights_source(p):
    p.add_argument("--weights", help="weights document from 'weights build'")
    p.add_argument("--centroids", help="centroids CSV (region_id,name,lat,lon)")
    p.add_argument("--cutoff", type=float, default=97.0, help="distance cutoff in km (default 97)")
    p.add_argument("--power", type=float, default=2.0, help="distance decay power (default 2)")


def _add_inference(p):
    p.add_argument("--permutations", type=int, default=PERMUTATIONS)
    p.add_argument("--seed", type=int, default=0)


def _regression_data(args, w):
    table = read_data_table(args.data)
    y = _column(table, args.y, args.data)
    xs = [x.strip() for x in args.x.split(",") if x.strip()]
    cols = [_column(table, x, args.data) for x in xs]
    vec = as_vector(y, w)
    regs = [as_vector(c, w) for c in cols]
    return RegressionData.with_intercept(vec, np.column_stack(regs), w.ids, names=xs, y_name=args.y)


def _write(path, text):
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"{path}: cannot write ({exc.strerror})") from None


# -- subcommands ------------------------------------------------------------


def cmd_weights_build(args, out):
    w = build_weights(read_centroids(args.centroids), cutoff_km=args.cutoff, power=args.power,
                      allow_islands=args.allow_islands)
    save_weights(w, args.out)
    c = connectivity_report(w)
    print(f"wrote {args.out}: n = {w.n}, cutoff = {w.cutoff_km:g} km, power = {w.power:g}", file=out)
    print(f"neighbors: min {c.min_neighbors}, max {c.max_neighbors}, mean {c.mean_neighbors:.6g}", file=out)
    if c.island_ids:
        print("islands: " + ", ".join(c.island_ids), file=out)


def cmd_esda_moran(args, out):
    w = _weights(args)
    x = as_vector(_column(read_data_table(args.data), args.var, args.data), w)
    r = global_moran(x, w, permutations=args.permutations, seed=args.seed)
    print(f"Moran's I ({args.var}): I = {r.I:.6g}", file=out)
    print(f"E[I] = {r.expected:.6g}, z = {r.z_score:.6g}, pseudo p = {r.pseudo_p:.6g} "
          f"({r.permutations} permutations, seed {r.seed})", file=out)


def cmd_esda_geary(args, out):
    w = _weights(args)
    x = as_vector(_column(read_data_table(args.data), args.var, args.data), w)
    print(f"Geary's C ({args.var}): C = {geary_c(x, w):.6g}", file=out)


def cmd_esda_lisa(args, out):
    w = _weights(args)
    x = as_vector(_column(read_data_table(args.data), args.var, args.data), w)
    lisa = local_moran_lisa(x, w, permutations=args.permutations, seed=args.seed, alpha=args.alpha)
    written = render_lisa_outputs(lisa, args.out, polygons=args.polygons, svg_path=args.svg)
    n_sig = int(lisa.significant.sum())
    print(f"LISA ({args.var}): {n_sig} of {len(lisa.ids)} regions significant at {args.alpha:g}", file=out)
    for p in written:
        print(f"wrote {p}", file=out)


def cmd_plot_scatter(args, out):
    w = _weights(args)
    x = as_vector(_column(read_data_table(args.data), args.var, args.data), w)
    scatter = moran_scatter_data(x, w)
    render_moran_scatter_svg(scatter, args.out, variable=args.var)
    print(f"wrote {args.out} (slope I = {scatter.slope:.6g})", file=out)
    if args.csv:
        _write(args.csv, scatter_csv(scatter))
        print(f"wrote {args.csv}", file=out)


def _ols_and_diagnostics(args):
    w = _weights(args)
    data = _regression_data(args, w)
    fit = ols_fit(data)
    diag = lm_diagnostics(fit, data, w, permutations=args.permutations, seed=args.seed)
    return w, data, fit, diag


def _single_sector_report(data, fit, diag):
    return {
        "sectors": [
            {
                "sector": data.y_name,
                "period": [],
                "ols": ols_entry(fit),
                "diagnostics": {k: {"statistic": _nan_none(v[0]), "p_value": _nan_none(v[1])}
                                for k, v in diag.as_dict().items()},
            }
        ]
    }


def _nan_none(x):
    return None if x is None or math.isnan(x) else float(x)


def cmd_reg_ols(args, out):
    _, data, fit, diag = _ols_and_diagnostics(args)
    for name, c, se, t, p in zip(fit.names, fit.coefficients, fit.std_errors, fit.t_stats, fit.p_values):
        print(f"{name:>10}  coef {c:.6g}  se {se:.6g}  t {t:.6g}  p {p:.6g}", file=out)
    report = _single_sector_report(data, fit, diag)
    print(render_table(report), end="", file=out)
    if args.report:
        _write(args.report, dumps_report(report))


def _cmd_ml(kind):
    def run(args, out):
        w = _weights(args)
        data = _regression_data(args, w)
        fit = (fit_spatial_lag if kind == "LAG" else fit_spatial_error)(data, w)
        label = "rho" if kind == "LAG" else "lambda"
        for name, c, se, z in zip(fit.names, fit.coefficients, fit.std_errors, fit.z_stats):
            print(f"{name:>10}  coef {c:.6g}  se {se:.6g}  z {z:.6g}", file=out)
        print(f"{label:>10}  coef {fit.spatial_coef:.6g}  se {fit.spatial_se:.6g}  z {fit.spatial_z:.6g}",
              file=out)
        print(f"log-likelihood {fit.log_likelihood:.6g} (OLS {fit.ols_log_likelihood:.6g}), "
              f"pseudo R2 {fit.pseudo_r2:.6g}", file=out)
        report = {"sectors": [{"sector": data.y_name, "spatial": spatial_entry(fit)}]}
        print(render_ml_table(report), end="", file=out)
        if args.report:
            _write(args.report, dumps_report(report))

    return run


def cmd_spec_florax(args, out):
    replay = [args.lm_lag, args.lm_error]
    if any(v is not None for v in replay):
        if any(v is None for v in replay):
            raise UsageError("statistic replay needs both --lm-lag and --lm-error")
        nan = math.nan
        report = LMTests.from_statistics(
            args.lm_lag, args.lm_error,
            nan if args.rlm_lag is None else args.rlm_lag,
            nan if args.rlm_error is None else args.rlm_error,
        )
    else:
        if not args.data:
            raise UsageError("give --data/--y/--x or the published statistics (--lm-lag, --lm-error)")
        _, _, _, report = _ols_and_diagnostics(args)
    decision = florax_select(report, alpha=args.alpha, stats_variant=args.variant)
    print(render_trace(decision), file=out)
    print(f"choice: {decision.choice.value}", file=out)
    if args.report:
        _write(args.report, dumps_report(decision_entry(decision)))


def cmd_verdoorn_run(args, out):
    period = parse_period(args.period)
    panel = load_panel(args.panel, period=period)
    regions = read_centroids(args.centroids)
    config = VerdoornConfig(cutoff_km=args.cutoff, power=args.power, permutations=args.permutations,
                            seed=args.seed, alpha=args.alpha, stats_variant=args.variant)
    w = build_weights(regions, cutoff_km=config.cutoff_km, power=config.power)
    sectors = [s.strip().lower() for s in args.sectors.split(",") if s.strip()]
    reports = []
    for sector in sectors:
        sample = compute_growth_rates(panel, sector, period, regions=w.ids)
        reports.append(run_sector_analysis(sample, w, config))
    inputs = {
        "panel": {"path": str(args.panel), "sha256": file_digest(args.panel)},
        "centroids": {"path": str(args.centroids), "sha256": file_digest(args.centroids)},
    }
    doc = build_report(reports, w, config, inputs=inputs)
    _write(args.out, dumps_report(doc))
    table = render_table(doc) + "\n" + render_ml_table(doc)
    for s in doc["sectors"]:
        table += f"\n[{s['sector']}] Verdoorn coefficient: {s['returns_to_scale']['verdict']}"
        if s["spatial_returns_to_scale"]:
            table += f" (ML: {s['spatial_returns_to_scale']['verdict']})"
        table += "\n" + render_trace(_trace_objects(s["decision"]["trace"])) + "\n"
    print(table, end="", file=out)
    if args.table:
        _write(args.table, table)
    if args.figures:
        fig_dir = Path(args.figures)
        fig_dir.mkdir(parents=True, exist_ok=True)
        for rep in reports:
            scatter = moran_scatter_data(rep.data.y, w)
            name = f"moran_{rep.sector}_{period[0]}_{period[1]}.svg"
            render_moran_scatter_svg(scatter, fig_dir / name, variable=f"p ({rep.sector})")
    print(f"wrote {args.out}", file=out)


def _trace_objects(trace):
    from .spec_search import TraceStep

    return [TraceStep(t["step"], t["test"], t["statistic"], t["p_value"], t["outcome"]) for t in trace]


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spverdoorn", description="Spatial econometrics of Verdoorn's law.")
    parser.add_argument("--version", action="version", version=f"spverdoorn {__version__}")
    groups = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    g = groups.add_parser("weights", help="spatial weights").add_subparsers(dest="cmd", required=True,
                                                                              parser_class=_Parser)
    p = g.add_parser("build", help="build distance-band weights from centroids")
    p.add_argument("--centroids", required=True)
    p.add_argument("--cutoff", type=float, default=97.0)
    p.add_argument("--power", type=float, default=2.0)
    p.add_argument("--allow-islands", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_weights_build)

    g = groups.add_parser("esda", help="exploratory spatial data analysis").add_subparsers(
        dest="cmd", required=True, parser_class=_Parser)
    for name, func, help_ in (("moran", cmd_esda_moran, "global Moran's I"),
                              ("geary", cmd_esda_geary, "Geary's C"),
                              ("lisa", cmd_esda_lisa, "local Moran (LISA)")):
        p = g.add_parser(name, help=help_)
        p.add_argument("--data", required=True, help="CSV with region_id and variable columns")
        p.add_argument("--var", required=True)
        _add_weights_source(p)
        if name != "geary":
            _add_inference(p)
        if name == "lisa":
            p.add_argument("--alpha", type=float, default=0.05)
            p.add_argument("--out", required=True, help="LISA CSV output")
            p.add_argument("--polygons", help="GeoJSON FeatureCollection keyed by region_id")
            p.add_argument("--svg", help="cluster map output (with --polygons)")
        p.set_defaults(func=func)

    g = groups.add_parser("reg", help="regressions").add_subparsers(dest="cmd", required=True,
                                                                    parser_class=_Parser)
    for name, func in (("ols", cmd_reg_ols), ("ml-lag", _cmd_ml("LAG")), ("ml-error", _cmd_ml("ERROR"))):
        p = g.add_parser(name)
        p.add_argument("--data", required=True)
        p.add_argument("--y", required=True)
        p.add_argument("--x", required=True, help="comma-separated regressor columns")
        _add_weights_source(p)
        _add_inference(p)
        p.add_argument("--report", help="write the structured result here")
        p.set_defaults(func=func)

    g = groups.add_parser("spec", help="specification search").add_subparsers(dest="cmd", required=True,
                                                                              parser_class=_Parser)
    p = g.add_parser("florax", help="choose OLS, spatial lag or spatial error")
    p.add_argument("--data")
    p.add_argument("--y", default="p")
    p.add_argument("--x", default="q")
    _add_weights_source(p)
    _add_inference(p)
    for flag in ("--lm-lag", "--lm-error", "--rlm-lag", "--rlm-error"):
        p.add_argument(flag, type=float, help="replay a published statistic")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--variant", choices=("standard", "robust"), default="standard")
    p.add_argument("--report")
    p.set_defaults(func=cmd_spec_florax)

    g = groups.add_parser("verdoorn", help="full per-sector analysis").add_subparsers(
        dest="cmd", required=True, parser_class=_Parser)
    p = g.add_parser("run")
    p.add_argument("--panel", required=True)
    p.add_argument("--centroids", required=True)
    p.add_argument("--sectors", required=True, help="comma-separated; 'total' aggregates sectors")
    p.add_argument("--period", required=True, help="START:END, e.g. 1995:1999")
    p.add_argument("--cutoff", type=float, default=97.0)
    p.add_argument("--power", type=float, default=2.0)
    _add_inference(p)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--variant", choices=("standard", "robust"), default="standard")
    p.add_argument("--out", default="verdoorn_report.json")
    p.add_argument("--table", help="also write the text tables here")
    p.add_argument("--figures", help="directory for Moran scatterplot SVGs")
    p.set_defaults(func=cmd_verdoorn_run)

    g = groups.add_parser("plot", help="figures").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = g.add_parser("moran-scatter")
    p.add_argument("--data", required=True)
    p.add_argument("--var", required=True)
    _add_weights_source(p)
    p.add_argument("--out", required=True, help="SVG output")
    p.add_argument("--csv", help="also write region_id,z,lag")
    p.set_defaults(func=cmd_plot_scatter)
    return parser


def run_cli(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        args.func(args, out)
    except ValidationError as exc:
        print(f"spverdoorn: error: {_one_line(exc)}", file=err)
        return 1
    except NumericalError as exc:
        print(f"spverdoorn: numerical failure: {_one_line(exc)}", file=err)
        return 2
    except OSError as exc:
        print(f"spverdoorn: error: {exc.filename}: {exc.strerror}", file=err)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    return 0


def _one_line(exc) -> str:
    return " ".join(str(exc).split())


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
