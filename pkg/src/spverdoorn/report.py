"""Structured analysis report, fixed-width tables and CSV outputs.

The report document is plain JSON. Top-level keys: ``tool``, ``version``,
``inputs`` (path and sha256 per input file), ``config``, ``weights``
(connectivity summary), ``sectors`` (one entry per analysed sector, in the
configured order) and ``warnings``. Floats are written at full precision;
undefined statistics are ``null``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .weights import connectivity_report

__all__ = [
    "file_digest",
    "sector_entry",
    "build_report",
    "dumps_report",
    "loads_report",
    "stars",
    "render_table",
    "render_ml_table",
    "lisa_csv",
    "scatter_csv",
]

TABLE_COLUMNS = ("Con.", "Coef.", "JB", "BP", "KB", "M'I", "LM_l", "LMR_l", "LM_e", "LMR_e", "R²", "N.O.")
_TEST_KEYS = ("jb", "bp", "kb", "moran_resid_I", "lm_lag", "rlm_lag", "lm_error", "rlm_error")
ML_COLUMNS = ("Constant", "Coefficient", "Coefficient^(S)", "Breusch-Pagan", "R²", "N.Observations")


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _f(x):
    """JSON-safe float: NaN and infinities become ``None``."""
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _floats(xs):
    return [_f(x) for x in np.asarray(xs, dtype=float).ravel()]


def _pair(t):
    return {"statistic": _f(t[0]), "p_value": _f(t[1])}


def _rts(r):
    if r is None:
        return None
    return {
        "verdict": r.verdict.value,
        "coefficient": _f(r.coefficient),
        "t_zero": _f(r.t_zero),
        "p_zero": _f(r.p_zero),
        "t_unit": _f(r.t_unit),
        "p_unit": _f(r.p_unit),
    }


def ols_entry(fit) -> dict:
    return {
        "names": list(fit.names),
        "coefficients": _floats(fit.coefficients),
        "std_errors": _floats(fit.std_errors),
        "t_stats": _floats(fit.t_stats),
        "p_values": _floats(fit.p_values),
        "sigma2": _f(fit.sigma2),
        "sigma2_ml": _f(fit.sigma2_ml),
        "r2": _f(fit.r2),
        "r2_adj": _f(fit.r2_adj),
        "log_likelihood": _f(fit.log_likelihood),
        "n": fit.n,
    }


def spatial_entry(fit) -> dict | None:
    if fit is None:
        return None
    return {
        "kind": fit.kind,
        "names": list(fit.names),
        "spatial_coef": _f(fit.spatial_coef),
        "spatial_se": _f(fit.spatial_se),
        "spatial_z": _f(fit.spatial_z),
        "spatial_p": _f(fit.spatial_p),
        "coefficients": _floats(fit.coefficients),
        "std_errors": _floats(fit.std_errors),
        "z_stats": _floats(fit.z_stats),
        "p_values": _floats(fit.p_values),
        "sigma2": _f(fit.sigma2),
        "log_likelihood": _f(fit.log_likelihood),
        "ols_log_likelihood": _f(fit.ols_log_likelihood),
        "pseudo_r2": _f(fit.pseudo_r2),
        "breusch_pagan": _pair(fit.bp),
        "interval": [_f(fit.interval[0]), _f(fit.interval[1])],
        "n": fit.n,
    }


def decision_entry(decision) -> dict:
    return {
        "choice": decision.choice.value,
        "alpha": decision.alpha,
        "stats_variant": decision.stats_variant.value,
        "trace": [
            {"step": s.step, "test": s.test, "statistic": _f(s.statistic), "p_value": _f(s.p_value),
             "outcome": s.outcome}
            for s in decision.trace
        ],
    }


def sector_entry(rep) -> dict:
    """Serializable form of a :class:`~spverdoorn.verdoorn.VerdoornReport`."""
    return {
        "sector": rep.sector,
        "period": list(rep.period),
        "ids": list(rep.data.ids),
        "p": _floats(rep.data.y),
        "q": _floats(rep.data.X[:, 1]),
        "ols": ols_entry(rep.ols),
        "diagnostics": {k: _pair(getattr(rep.diagnostics, k)) for k in _TEST_KEYS},
        "decision": decision_entry(rep.decision),
        "spatial": spatial_entry(rep.spatial),
        "returns_to_scale": _rts(rep.returns_to_scale),
        "spatial_returns_to_scale": _rts(rep.spatial_returns_to_scale),
        "esda": {
            "variable": "p",
            "moran_I": _f(rep.moran_p.I),
            "expected": _f(rep.moran_p.expected),
            "z_score": _f(rep.moran_p.z_score),
            "pseudo_p": _f(rep.moran_p.pseudo_p),
            "permutations": rep.moran_p.permutations,
            "seed": rep.moran_p.seed,
        },
        "notes": list(rep.notes),
    }


def build_report(sector_reports, weights, config, inputs=None, warnings=()) -> dict:
    conn = connectivity_report(weights)
    return {
        "tool": "spverdoorn",
        "version": __version__,
        "inputs": dict(inputs or {}),
        "config": {
            "cutoff_km": config.cutoff_km,
            "power": config.power,
            "permutations": config.permutations,
            "seed": config.seed,
            "alpha": config.alpha,
            "stats_variant": config.stats_variant.value,
        },
        "weights": {
            "n": weights.n,
            "cutoff_km": weights.cutoff_km,
            "power": weights.power,
            "min_neighbors": conn.min_neighbors,
            "max_neighbors": conn.max_neighbors,
            "mean_neighbors": conn.mean_neighbors,
            "island_ids": list(conn.island_ids),
        },
        "sectors": [sector_entry(r) for r in sector_reports],
        "warnings": list(warnings),
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def loads_report(text: str) -> dict:
    return json.loads(text)


def stars(p) -> str:
    """``*`` at 5 %, ``**`` at 10 %."""
    if p is None or (isinstance(p, float) and math.isnan(p)):
        return ""
    if p <= 0.05:
        return "*"
    if p <= 0.10:
        return "**"
    return ""


def _num(x) -> str:
    return "n/a" if x is None else f"{x:.6g}"


def _stat_cell(d) -> str:
    if d is None or d.get("statistic") is None:
        return "n/a"
    return _num(d["statistic"]) + stars(d["p_value"])


def _coef_cell(value, t, p) -> str:
    return f"{_num(value)}{stars(p)} ({_num(t)})"


def _layout(header, rows) -> str:
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    fmt = lambda r: "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
    rule = "-" * len(fmt(header))
    return "\n".join([fmt(header), rule] + [fmt(r) for r in rows] + [rule])


def render_table(report: dict) -> str:
    """OLS estimates with the diagnostic battery, one row per sector."""
    rows = []
    for s in report["sectors"]:
        ols, diag = s["ols"], s["diagnostics"]
        rows.append(
            [
                s["sector"],
                _coef_cell(ols["coefficients"][0], ols["t_stats"][0], ols["p_values"][0]),
                _coef_cell(ols["coefficients"][1], ols["t_stats"][1], ols["p_values"][1]),
            ]
            + [_stat_cell(diag[k]) for k in _TEST_KEYS]
            + [_num(ols["r2_adj"]), str(ols["n"])]
        )
    periods = sorted({tuple(s["period"]) for s in report["sectors"] if len(s.get("period") or ()) == 2})
    title = "OLS estimates, p = a + b q + u"
    if periods:
        title += " (" + ", ".join(f"{a}-{b}" for a, b in periods) + ")"
    note = "*, significant at 5%; **, significant at 10%; M'I p-values by permutation"
    return "\n".join([title, _layout(["Sector", *TABLE_COLUMNS], rows), note]) + "\n"


def render_ml_table(report: dict) -> str:
    """ML estimates for sectors where a spatial model was selected."""
    rows = []
    kinds = []
    for s in report["sectors"]:
        sp = s["spatial"]
        if sp is None:
            continue
        kinds.append(f"{s['sector']}: {'spatial lag' if sp['kind'] == 'LAG' else 'spatial error'}")
        rows.append(
            [
                s["sector"],
                _coef_cell(sp["coefficients"][0], sp["z_stats"][0], sp["p_values"][0]),
                _coef_cell(sp["coefficients"][1], sp["z_stats"][1], sp["p_values"][1]),
                _coef_cell(sp["spatial_coef"], sp["spatial_z"], sp["spatial_p"]),
                _stat_cell(sp["breusch_pagan"]),
                _num(sp["pseudo_r2"]),
                str(sp["n"]),
            ]
        )
    if not rows:
        return "No spatial model selected.\n"
    notes = [
        "Coefficient^(S): " + "; ".join(kinds) + ". z-statistics in parentheses.",
        "*, significant at 5%; **, significant at 10%.",
        "Lag-model coefficients include the spatial multiplier and are not directly "
        "comparable with error-model estimates.",
    ]
    return "\n".join(["ML estimates with spatial effects", _layout(["Sector", *ML_COLUMNS], rows)]
                     + notes) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def lisa_csv(lisa) -> str:
    return _csv_text(
        ("region_id", "local_i", "pseudo_p", "quadrant", "significant"),
        [(rid, repr(li), repr(p), q, "true" if s else "false") for rid, li, p, q, s in lisa.rows()],
    )


def scatter_csv(scatter) -> str:
    return _csv_text(
        ("region_id", "z", "lag"),
        [(rid, repr(float(z)), repr(float(l))) for rid, z, l in zip(scatter.ids, scatter.z, scatter.lag)],
    )
