import math
from types import SimpleNamespace

import numpy as np
import pytest

from spverdoorn.errors import PanelError, RankDeficientError, ValidationError
from spverdoorn.regression import wald_coefficient_test
from spverdoorn.spec_search import Choice
from spverdoorn.verdoorn import (TOTAL, RtsVerdict, VerdoornConfig, classify_returns_to_scale,
                                 compute_growth_rates, load_panel, parse_period, run_sector_analysis)
from spverdoorn.weights import build_weights

from sim import grid_regions

HEADER = "region_id,sector,year,gva,employment\n"


def write(tmp_path, rows, name="panel.csv"):
    path = tmp_path / name
    path.write_text(HEADER + "".join(",".join(map(str, r)) + "\n" for r in rows))
    return path


def synthetic_panel(tmp_path, regions, rng, gamma=0.6, years=(2000, 2005), scale=1.0):
    rows = []
    for r in regions:
        for sector in ("industry", "services"):
            q = rng.uniform(0.0, 0.06)
            p = 0.005 + gamma * q + rng.normal(scale=0.003)
            e = q - p
            gva0 = scale * rng.uniform(100, 500)
            emp0 = rng.uniform(10, 50)
            for y in range(years[0], years[1] + 1):
                t = y - years[0]
                rows.append((r.id, sector, y, repr(gva0 * math.exp(q * t)), repr(emp0 * math.exp(e * t))))
    return write(tmp_path, rows)


def test_parse_period():
    assert parse_period("1995:1999") == (1995, 1999)
    for bad in ("1995", "1999:1995", "a:b"):
        with pytest.raises(ValidationError):
            parse_period(bad)


def test_total_is_aggregated(tmp_path):
    path = write(tmp_path, [
        ("A", "Industry", 2000, 100, 10), ("A", "services", 2000, 50, 10),
    ])
    panel = load_panel(path)
    assert panel.sectors == ("industry", "services")
    assert panel.productivity("A", TOTAL, 2000) == 7.5


def test_supplied_total_overrides(tmp_path):
    path = write(tmp_path, [
        ("A", "industry", 2000, 100, 10), ("A", "total", 2000, 90, 10),
    ])
    assert load_panel(path).productivity("A", TOTAL, 2000) == 9.0


def test_growth_rate_values(tmp_path):
    path = write(tmp_path, [
        ("A", "industry", 2000, 100, 10), ("A", "industry", 2005, 110, 10),
        ("B", "industry", 2000, 100, 10), ("B", "industry", 2005, 121, 11),
    ])
    g = compute_growth_rates(load_panel(path), "industry", (2000, 2005))
    assert g.p[0] == pytest.approx(math.log(1.1) / 5)
    assert round(g.p[0], 6) == 0.019062
    np.testing.assert_allclose(g.p, g.q - g.e, atol=1e-15)


def test_currency_invariance(tmp_path, rng):
    regions = grid_regions(9)
    a = load_panel(synthetic_panel(tmp_path, regions, np.random.default_rng(1)))
    b = load_panel(synthetic_panel(tmp_path, regions, np.random.default_rng(1), scale=200.482))
    ga = compute_growth_rates(a, "services", (2000, 2005))
    gb = compute_growth_rates(b, "services", (2000, 2005))
    np.testing.assert_allclose(ga.p, gb.p, atol=1e-12)
    np.testing.assert_allclose(ga.q, gb.q, atol=1e-12)


def test_panel_validation_collects_problems(tmp_path):
    path = write(tmp_path, [
        ("A", "industry", 2000, 100, 10),
        ("A", "industry", 2000, 100, 10),
        ("B", "industry", 2000, -5, 10),
        ("C", "industry", 2000, 5, 0),
        ("D", "industry", "x", 5, 1),
    ])
    with pytest.raises(PanelError) as info:
        load_panel(path)
    msg = str(info.value)
    for fragment in (":3: duplicate", ":4: gva", ":5: employment", ":6: non-numeric"):
        assert fragment in msg


def test_panel_missing_years(tmp_path):
    path = write(tmp_path, [("A", "industry", 2000, 1, 1), ("A", "industry", 2002, 1, 1)])
    with pytest.raises(PanelError, match=r"missing years \[2001\]"):
        load_panel(path, period=(2000, 2002))
    with pytest.raises(PanelError):
        compute_growth_rates(load_panel(path), "industry", (2000, 2003))


def test_panel_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("id,sector,year,gva,emp\n")
    with pytest.raises(PanelError, match=":1:"):
        load_panel(path)


def fake_fit(coef, se, df=None):
    fit = SimpleNamespace(coefficients=np.array([0.0, coef]), std_errors=np.array([1.0, se]))
    if df is not None:
        fit.df_resid = df
    return fit


def test_wald_reconstruction():
    fit = fake_fit(1.032, 1.032 / 9.250)
    assert wald_coefficient_test(fit, 1, 1.0) == pytest.approx(0.287, abs=0.005)


def test_returns_to_scale_verdicts():
    assert classify_returns_to_scale(fake_fit(1.032, 1.032 / 9.25, df=26)).verdict is RtsVerdict.NEAR_UNIT
    assert classify_returns_to_scale(fake_fit(0.169, 0.169 / 1.601, df=26)).verdict is RtsVerdict.CONSTANT
    assert classify_returns_to_scale(fake_fit(0.5, 0.05)).verdict is RtsVerdict.INCREASING
    assert classify_returns_to_scale(fake_fit(1.8, 0.05)).verdict is RtsVerdict.OUT_OF_RANGE
    assert classify_returns_to_scale(fake_fit(0.5, 2.0)).verdict is RtsVerdict.INCONCLUSIVE
    normal = classify_returns_to_scale(fake_fit(0.5, 0.25))
    student = classify_returns_to_scale(fake_fit(0.5, 0.25, df=5))
    assert student.p_zero > normal.p_zero


def test_sector_analysis_end_to_end(tmp_path, rng):
    regions = grid_regions(25, seed=3)
    w = build_weights(regions, cutoff_km=75)
    panel = load_panel(synthetic_panel(tmp_path, regions, rng), period=(2000, 2005))
    sample = compute_growth_rates(panel, "industry", (2000, 2005), regions=tuple(reversed(w.ids)))
    rep = run_sector_analysis(sample, w, VerdoornConfig(permutations=99, seed=3))
    assert rep.data.ids == w.ids
    assert rep.ols.coefficients[1] == pytest.approx(0.6, abs=0.15)
    assert rep.returns_to_scale.verdict is RtsVerdict.INCREASING
    assert rep.decision.choice in tuple(Choice)
    assert (rep.spatial is None) == (rep.decision.choice is Choice.OLS)
    total = compute_growth_rates(panel, TOTAL, (2000, 2005), regions=w.ids)
    assert run_sector_analysis(total, w, VerdoornConfig(permutations=99)).sector == TOTAL


def test_constant_output_growth_names_sector(tmp_path):
    regions = grid_regions(9)
    rows = []
    for k, r in enumerate(regions):
        rows += [(r.id, "energy", 2000, 100, 10 + k), (r.id, "energy", 2005, 120, 11 + k)]
    w = build_weights(regions, cutoff_km=75)
    sample = compute_growth_rates(load_panel(write(tmp_path, rows)), "energy", (2000, 2005), regions=w.ids)
    with pytest.raises(RankDeficientError, match="energy"):
        run_sector_analysis(sample, w, VerdoornConfig(permutations=9))
