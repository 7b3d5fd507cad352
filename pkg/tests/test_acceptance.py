"""Acceptance suite: one PASS/FAIL line per criterion.

Lines are collected during the run and printed in the pytest terminal
summary (see ``conftest.py``); running this file directly prints them too.
Monte Carlo criteria are marked ``slow`` and run by default.
"""

import io
import math

import numpy as np
import pytest

from spverdoorn import esda
from spverdoorn.cli import run_cli
from spverdoorn.regression import LMTests, RegressionData, lm_tests, ols_fit, wald_coefficient_test
from spverdoorn.spatial_ml import (ERROR, LAG, concentrated_loglik, fit_spatial_error, fit_spatial_lag,
                                   maximize_scalar, spectrum_log_det)
from spverdoorn.spec_search import Choice, florax_select
from spverdoorn.weights import build_weights

from conftest import line_regions
from sim import design, error_dgp, grid_regions, grid_weights, lag_dgp, random_point_weights, write_centroids, write_panel

RESULTS = []


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_c01_expected_moran():
    e = esda.expected_moran(28)
    record(1, "E[I] for n = 28", round(e, 3) == -0.037 and abs(e + 1 / 27) < 1e-15, f"{e:.6f}")


def test_c02_wald_reconstruction():
    from types import SimpleNamespace

    fit = SimpleNamespace(coefficients=np.array([0.0, 1.032]), std_errors=np.array([1.0, 1.032 / 9.250]))
    t = wald_coefficient_test(fit, 1, 1.0)
    record(2, "Wald t of 1.032 against 1", abs(t - 0.287) <= 0.005, f"t = {t:.4f}")


def test_c03_florax_replay():
    cases = [((0.416, 8.774), Choice.ERROR), ((4.749, 3.607), Choice.LAG),
             ((8.742, 4.444), Choice.LAG), ((5.215, 9.462), Choice.ERROR)]
    got = [florax_select(LMTests.from_statistics(*stats)).choice for stats, _ in cases]
    ok = got == [c for _, c in cases]
    record(3, "decision replay from published LM statistics", ok, ", ".join(c.value for c in got))


def test_c04_moran_geary_lisa():
    w = build_weights(line_regions(), cutoff_km=150)
    x = np.array([1.0, 1.0, -1.0, -1.0])
    i_err = abs(esda.global_moran(x, w, 9).I - 0.5)
    c_err = abs(esda.geary_c(x, w) - 0.375)
    rng = np.random.default_rng(404)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(5, 40))
        wr = random_point_weights(n, rng)
        v = rng.normal(size=n)
        worst = max(worst, abs(esda.local_moran_lisa(v, wr, 9).local_i.sum() - esda.global_moran(v, wr, 9).I))
    ok = i_err <= 1e-12 and c_err <= 1e-12 and worst <= 1e-10
    record(4, "line fixture I and C, local sum", ok, f"|dI| = {i_err:.1e}, |dC| = {c_err:.1e}, max |sum-I| = {worst:.1e}")


def test_c05_ols_oracle():
    rng = np.random.default_rng(505)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(10, 80))
        X = design(n, rng, int(rng.integers(2, 5)))
        y = X @ rng.normal(size=X.shape[1]) + rng.normal(size=n)
        ref = np.linalg.solve(X.T @ X, X.T @ y)
        worst = max(worst, float(np.max(np.abs(ols_fit(RegressionData(y, X, tuple(range(n)))).coefficients - ref))))
    fx = ols_fit(RegressionData.with_intercept([1, 2, 2, 4], [0, 1, 2, 3], tuple("abcd"))).coefficients
    fixture_err = float(np.max(np.abs(fx - 0.9)))
    ok = worst <= 1e-10 and fixture_err <= 1e-12
    record(5, "OLS vs normal equations", ok, f"max err {worst:.1e}, fixture ({fx[0]:.12g}, {fx[1]:.12g})")


def test_c06_concentrated_at_zero():
    rng = np.random.default_rng(606)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(10, 50))
        w = random_point_weights(n, rng)
        data = lag_dgp(w, 0.4, rng)
        ols_ll = ols_fit(data).log_likelihood
        for kind in (LAG, ERROR):
            worst = max(worst, abs(concentrated_loglik(kind, data, w)(0.0) - ols_ll))
    record(6, "concentrated log-likelihood at 0 equals OLS", worst <= 1e-8, f"max diff {worst:.1e}")


def test_c07_log_det():
    rng = np.random.default_rng(707)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(3, 21))
        w = random_point_weights(n, rng, cutoff_km=float(rng.uniform(200, 500)))
        spec = spectrum_log_det(w)
        lo, hi = spec.interval
        rho = float(rng.uniform(0.99 * lo, 0.99 * hi))
        worst = max(worst, abs(spec.log_det(rho) - np.linalg.slogdet(np.eye(n) - rho * w.dense())[1]))
    record(7, "spectral log-determinant vs dense", worst <= 1e-8, f"max diff {worst:.1e}")


def test_c08_optimizer_vs_grid():
    rng = np.random.default_rng(808)
    worst = 0.0
    for k in range(20):
        kind = LAG if k % 2 == 0 else ERROR
        w = random_point_weights(10, rng, cutoff_km=300)
        data = (lag_dgp if kind == LAG else error_dgp)(w, float(rng.uniform(-0.3, 0.8)), rng)
        spec = spectrum_log_det(w)
        f = concentrated_loglik(kind, data, w, spec)
        lo, hi = spec.interval
        x, _ = maximize_scalar(f, lo, hi)
        pts = np.arange(lo + 1e-4, hi, 1e-4)
        ref = pts[int(np.argmax([f(p) for p in pts]))]
        worst = max(worst, abs(x - ref))
    record(8, "ML optimizer vs 1e-4 grid search", worst <= 1e-3, f"max |diff| {worst:.1e}")


@pytest.mark.slow
def test_c09_monte_carlo_recovery():
    w = grid_weights(100, seed=0)
    spec = spectrum_log_det(w)
    rng = np.random.default_rng(909)
    rho = np.mean([fit_spatial_lag(lag_dgp(w, 0.5, rng, beta=(1.0, 2.0)), w, spec).spatial_coef
                   for _ in range(200)])
    lam = np.mean([fit_spatial_error(error_dgp(w, 0.6, rng, beta=(1.0, 2.0)), w, spec).spatial_coef
                   for _ in range(200)])
    ok = 0.45 <= rho <= 0.55 and 0.52 <= lam <= 0.68
    record(9, "Monte Carlo recovery (n = 100, 200 reps)", ok, f"mean rho {rho:.4f}, mean lambda {lam:.4f}")


@pytest.mark.slow
def test_c10_lm_size():
    w = grid_weights(50, seed=1)
    rng = np.random.default_rng(1010)
    rejections = np.zeros(4)
    reps = 1000
    for _ in range(reps):
        X = design(50, rng, 2)
        data = RegressionData(X @ [1.0, 1.0] + rng.normal(size=50), X, w.ids)
        t = lm_tests(ols_fit(data), data, w)
        rejections += [s.p_value <= 0.05 for s in (t.lm_lag, t.rlm_lag, t.lm_error, t.rlm_error)]
    rates = rejections / reps
    ok = bool(np.all((rates >= 0.03) & (rates <= 0.08)))
    record(10, "LM size at 5% (LM_lag, RLM_lag, LM_err, RLM_err)", ok, ", ".join(f"{r:.3f}" for r in rates))


@pytest.mark.slow
def test_c11_spec_search_accuracy():
    w = grid_weights(100, seed=2)
    rng = np.random.default_rng(1111)
    reps = 500

    def share(make, target):
        hits = 0
        for _ in range(reps):
            data = make()
            hits += florax_select(lm_tests(ols_fit(data), data, w)).choice is target
        return hits / reps

    lag = share(lambda: lag_dgp(w, 0.5, rng), Choice.LAG)
    err = share(lambda: error_dgp(w, 0.6, rng), Choice.ERROR)
    null = share(lambda: lag_dgp(w, 0.0, rng), Choice.OLS)
    ok = lag > 0.60 and err > 0.60 and null > 0.85
    record(11, "specification search accuracy", ok, f"LAG {lag:.3f}, ERROR {err:.3f}, OLS {null:.3f}")


def test_c12_cli_determinism(tmp_path):
    regions = grid_regions(28, seed=12)
    cen = write_centroids(tmp_path / "centroids.csv", regions)
    panel = write_panel(tmp_path / "panel.csv", regions, seed=12)
    blobs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        argv = ["verdoorn", "run", "--panel", str(panel), "--centroids", str(cen), "--cutoff", "80",
                "--sectors", "industry,services,total", "--period", "1995:1999", "--seed", "7",
                "--out", str(d / "report.json"), "--figures", str(d)]
        d.mkdir()
        assert run_cli(argv, io.StringIO(), io.StringIO()) == 0
        blobs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    names = sorted(blobs[0])
    ok = blobs[0] == blobs[1] and "report.json" in names and any(n.endswith(".svg") for n in names)
    record(12, "byte-identical CLI outputs for a fixed seed", ok, f"{len(names)} files compared")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
