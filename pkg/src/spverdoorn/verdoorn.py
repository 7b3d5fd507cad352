"""Verdoorn's law per sector: panel ingestion, growth rates, full analysis.

Growth rates are annualized log differences between the period endpoints,
so productivity growth equals output growth minus employment growth
exactly.
"""

from __future__ import annotations

import csv
import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._stats import norm_two_sided, t_two_sided
from .errors import DimensionMismatchError, PanelError, RankDeficientError, ValidationError
from .esda import PERMUTATIONS, MoranResult, global_moran
from .regression import DiagnosticsReport, OlsFit, RegressionData, lm_diagnostics, ols_fit
from .spatial_ml import SpatialFit, fit_spatial_error, fit_spatial_lag
from .spec_search import Choice, SpecDecision, StatsVariant, florax_select

__all__ = [
    "TOTAL",
    "PanelRecord",
    "Panel",
    "GrowthSample",
    "VerdoornConfig",
    "ReturnsToScale",
    "RtsVerdict",
    "VerdoornReport",
    "load_panel",
    "compute_growth_rates",
    "run_sector_analysis",
    "classify_returns_to_scale",
    "parse_period",
]

TOTAL = "total"
PANEL_HEADER = ("region_id", "sector", "year", "gva", "employment")
COMPARABILITY_NOTE = (
    "spatial lag coefficients include the spatial multiplier and are not directly "
    "comparable with spatial error or OLS coefficients"
)


@dataclass(frozen=True)
class PanelRecord:
    region_id: str
    sector: str
    year: int
    gva: float
    employment: float


class Panel:
    """Validated panel records keyed by ``(region, sector, year)``."""

    def __init__(self, records, source: str = "<panel>"):
        self.records = tuple(records)
        self.source = source
        self._by_key = {(r.region_id, r.sector, r.year): r for r in self.records}

    def __len__(self):
        return len(self.records)

    @property
    def sectors(self) -> tuple:
        return tuple(sorted({r.sector for r in self.records}))

    @property
    def regions(self) -> tuple:
        return tuple(sorted({r.region_id for r in self.records}))

    def sector_records(self, sector: str) -> list[PanelRecord]:
        return [r for r in self.records if r.sector == sector]

    def values(self, region_id: str, sector: str, year: int) -> tuple[float, float] | None:
        """``(gva, employment)`` for one cell; ``total`` is aggregated unless supplied."""
        rec = self._by_key.get((region_id, sector, year))
        if rec is not None:
            return rec.gva, rec.employment
        if sector != TOTAL:
            return None
        parts = [r for (rid, s, y), r in self._by_key.items()
                 if rid == region_id and y == year and s != TOTAL]
        if not parts:
            return None
        return sum(r.gva for r in parts), sum(r.employment for r in parts)

    def productivity(self, region_id: str, sector: str, year: int) -> float | None:
        v = self.values(region_id, sector, year)
        return None if v is None else v[0] / v[1]


def parse_period(text: str) -> tuple[int, int]:
    try:
        start, end = (int(p) for p in str(text).split(":"))
    except ValueError:
        raise ValidationError(f"period must look like START:END, got {text!r}") from None
    if end <= start:
        raise ValidationError(f"period end {end} must be after start {start}")
    return start, end


def load_panel(path, period: tuple[int, int] | None = None) -> Panel:
    """Read a ``region_id,sector,year,gva,employment`` CSV.

    All problems found are reported together with their row numbers. With
    ``period``, every (region, sector) series present must cover every year
    of the period.
    """
    path = Path(path)
    problems = []
    records = []
    first_row = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != PANEL_HEADER:
            raise PanelError(f"{path}:1: expected header {','.join(PANEL_HEADER)}, got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 5:
                problems.append(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
                continue
            rid, sector, year, gva, emp = (c.strip() for c in row)
            try:
                year_i, gva_f, emp_f = int(year), float(gva), float(emp)
            except ValueError:
                problems.append(f"{path}:{lineno}: non-numeric year/gva/employment")
                continue
            if not (math.isfinite(gva_f) and gva_f > 0):
                problems.append(f"{path}:{lineno}: gva must be positive, got {gva}")
            if not (math.isfinite(emp_f) and emp_f > 0):
                problems.append(f"{path}:{lineno}: employment must be positive, got {emp}")
            key = (rid, sector.lower(), year_i)
            if key in first_row:
                problems.append(f"{path}:{lineno}: duplicate {key} (first at row {first_row[key]})")
                continue
            first_row[key] = lineno
            records.append(PanelRecord(rid, sector.lower(), year_i, gva_f, emp_f))
    if period is not None and not problems:
        start, end = period
        series = defaultdict(set)
        for r in records:
            series[(r.region_id, r.sector)].add(r.year)
        for (rid, sector), years in sorted(series.items()):
            missing = [y for y in range(start, end + 1) if y not in years]
            if missing:
                problems.append(f"{path}: region {rid!r} sector {sector!r} missing years {missing}")
    if problems:
        raise PanelError("; ".join(problems))
    return Panel(records, source=str(path))


@dataclass(frozen=True, eq=False)
class GrowthSample:
    ids: tuple
    p: np.ndarray
    q: np.ndarray
    e: np.ndarray
    sector: str
    period: tuple

    def reorder(self, ids) -> "GrowthSample":
        ids = tuple(ids)
        if sorted(ids) != sorted(self.ids) or len(ids) != len(self.ids):
            missing = sorted(set(ids) - set(self.ids))
            extra = sorted(set(self.ids) - set(ids))
            raise DimensionMismatchError(
                f"sector {self.sector!r}: sample/weights regions differ "
                f"(missing from sample {missing}, not in weights {extra})"
            )
        pos = {rid: i for i, rid in enumerate(self.ids)}
        idx = np.array([pos[r] for r in ids])
        return GrowthSample(ids, self.p[idx], self.q[idx], self.e[idx], self.sector, self.period)


def compute_growth_rates(panel: Panel, sector: str, period: tuple[int, int],
                         regions=None) -> GrowthSample:
    """Average annual growth of productivity (p), output (q) and employment (e)."""
    start, end = period
    if end <= start:
        raise ValidationError(f"period end {end} must be after start {start}")
    sector = sector.lower()
    if regions is None:
        regions = panel.regions
    span = float(end - start)
    p, q, e = [], [], []
    for rid in regions:
        v0 = panel.values(rid, sector, start)
        v1 = panel.values(rid, sector, end)
        if v0 is None or v1 is None:
            year = start if v0 is None else end
            raise PanelError(f"sector {sector!r}: region {rid!r} has no data for {year}")
        q.append(math.log(v1[0] / v0[0]) / span)
        e.append(math.log(v1[1] / v0[1]) / span)
        p.append(math.log((v1[0] / v1[1]) / (v0[0] / v0[1])) / span)
    return GrowthSample(tuple(regions), np.array(p), np.array(q), np.array(e), sector, (start, end))


class RtsVerdict(str, enum.Enum):
    CONSTANT = "CONSTANT"
    NEAR_UNIT = "NEAR_UNIT"
    INCREASING = "INCREASING"
    OUT_OF_RANGE = "OUT_OF_RANGE"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class ReturnsToScale:
    verdict: RtsVerdict
    coefficient: float
    t_zero: float
    p_zero: float
    t_unit: float
    p_unit: float


def classify_returns_to_scale(fit, alpha: float = 0.05, index: int = 1) -> ReturnsToScale:
    """Wald tests of the Verdoorn coefficient against 0 and against 1.

    OLS fits (anything with ``df_resid``) use Student t; ML fits use the
    normal distribution.
    """
    coef = float(fit.coefficients[index])
    se = float(fit.std_errors[index]) if fit.std_errors is not None else math.nan
    if not (math.isfinite(se) and se > 0):
        raise ValidationError("returns-to-scale test needs a finite positive standard error")
    t0 = coef / se
    t1 = (coef - 1.0) / se
    df = getattr(fit, "df_resid", None)
    if df is not None:
        p0, p1 = t_two_sided(t0, df), t_two_sided(t1, df)
    else:
        p0, p1 = norm_two_sided(t0), norm_two_sided(t1)
    zero_rejected, unit_rejected = p0 <= alpha, p1 <= alpha
    if not zero_rejected and not unit_rejected:
        verdict = RtsVerdict.INCONCLUSIVE
    elif not zero_rejected:
        verdict = RtsVerdict.CONSTANT
    elif not unit_rejected:
        verdict = RtsVerdict.NEAR_UNIT
    elif 0.0 < coef < 1.0:
        verdict = RtsVerdict.INCREASING
    else:
        verdict = RtsVerdict.OUT_OF_RANGE
    return ReturnsToScale(verdict, coef, t0, p0, t1, p1)


@dataclass(frozen=True)
class VerdoornConfig:
    cutoff_km: float = 97.0
    power: float = 2.0
    permutations: int = PERMUTATIONS
    seed: int = 0
    alpha: float = 0.05
    stats_variant: StatsVariant = StatsVariant.STANDARD

    def __post_init__(self):
        if not isinstance(self.stats_variant, StatsVariant):
            object.__setattr__(self, "stats_variant", StatsVariant(str(self.stats_variant).upper()))


@dataclass(frozen=True, eq=False)
class VerdoornReport:
    sector: str
    period: tuple
    data: RegressionData
    ols: OlsFit
    diagnostics: DiagnosticsReport
    decision: SpecDecision
    spatial: SpatialFit | None
    returns_to_scale: ReturnsToScale
    spatial_returns_to_scale: ReturnsToScale | None
    moran_p: MoranResult
    notes: tuple = field(default=())


def run_sector_analysis(sample: GrowthSample, w, config: VerdoornConfig = VerdoornConfig()) -> VerdoornReport:
    """OLS + diagnostics, specification search, and the chosen ML fit."""
    sample = sample.reorder(w.ids)
    data = RegressionData.with_intercept(sample.p, sample.q, sample.ids, names=("q",), y_name="p")
    try:
        ols = ols_fit(data)
    except RankDeficientError as exc:
        raise RankDeficientError(f"sector {sample.sector!r}: {exc}") from None
    diagnostics = lm_diagnostics(ols, data, w, permutations=config.permutations, seed=config.seed)
    decision = florax_select(diagnostics, alpha=config.alpha, stats_variant=config.stats_variant)
    moran_p = global_moran(sample.p, w, permutations=config.permutations, seed=config.seed)
    spatial = None
    notes = []
    if decision.choice is Choice.LAG:
        spatial = fit_spatial_lag(data, w)
    elif decision.choice is Choice.ERROR:
        spatial = fit_spatial_error(data, w)
    if spatial is not None:
        notes.append(COMPARABILITY_NOTE)
    return VerdoornReport(
        sector=sample.sector,
        period=sample.period,
        data=data,
        ols=ols,
        diagnostics=diagnostics,
        decision=decision,
        spatial=spatial,
        returns_to_scale=classify_returns_to_scale(ols, config.alpha),
        spatial_returns_to_scale=None if spatial is None else classify_returns_to_scale(spatial, config.alpha),
        moran_p=moran_p,
        notes=tuple(notes),
    )
