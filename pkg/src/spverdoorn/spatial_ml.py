"""Maximum-likelihood spatial lag and spatial error models.

Both models are fitted by maximizing the concentrated log-likelihood in the
scalar spatial parameter; ``beta`` and ``sigma**2`` have closed forms given
it. ``log|I - rho W|`` comes from the spectrum of ``W``, which is real because
``W = D^-1 W*`` with symmetric ``W*`` is similar to ``D^-1/2 W* D^-1/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._stats import norm_two_sided
from .errors import AsymmetricWeightsError, BoundarySolutionError, IslandError, NumericalError
from .regression import (
    RegressionData,
    TestStat,
    _solve_ls,
    heteroskedasticity_test,
    ols_fit,
)

__all__ = [
    "LAG",
    "ERROR",
    "SpectrumLogDet",
    "SpatialFit",
    "spectrum_log_det",
    "concentrated_loglik",
    "maximize_scalar",
    "numerical_hessian",
    "fit_spatial_lag",
    "fit_spatial_error",
]

LAG = "LAG"
ERROR = "ERROR"
BOUNDARY_TOL = 1e-6
GRID_POINTS = 200
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class SpectrumLogDet:
    eigenvalues: np.ndarray

    @property
    def interval(self) -> tuple[float, float]:
        """Open interval ``(1/omega_min, 1/omega_max)`` where ``I - rho W`` is nonsingular."""
        return 1.0 / float(self.eigenvalues[0]), 1.0 / float(self.eigenvalues[-1])

    def log_det(self, rho: float) -> float:
        """``log|I - rho W| = sum_k log(1 - rho * omega_k)``."""
        arg = 1.0 - rho * self.eigenvalues
        if np.any(arg <= 0):
            return -math.inf
        return float(np.sum(np.log(arg)))


def spectrum_log_det(w) -> SpectrumLogDet:
    if w.island_ids:
        raise IslandError(w.island_ids)
    raw = w.dense_raw()
    if not np.allclose(raw, raw.T, rtol=1e-12, atol=0.0):
        raise AsymmetricWeightsError("raw weights must be symmetric for the spectral log-determinant")
    d = 1.0 / np.sqrt(raw.sum(axis=1))
    sym = d[:, None] * raw * d[None, :]
    eig = np.linalg.eigvalsh(0.5 * (sym + sym.T))
    if not (eig[0] < 0.0 < eig[-1]):
        raise NumericalError("weights spectrum does not straddle zero")
    return SpectrumLogDet(eigenvalues=eig)


def _resid(X, y):
    return y - X @ _solve_ls(X, y)


def concentrated_loglik(kind: str, data: RegressionData, w, spectrum: SpectrumLogDet | None = None):
    """Return ``f(coef)``, the concentrated log-likelihood of the lag or error model.

    ``f(0)`` equals the OLS log-likelihood of ``data``.
    """
    data.check_aligned(w)
    spectrum = spectrum or spectrum_log_det(w)
    n = data.n
    const = -0.5 * n * (_LOG_2PI + 1.0)
    y, X = data.y, data.X
    Wy = w.lag(y)
    if kind == LAG:
        e0 = _resid(X, y)
        eL = _resid(X, Wy)
        a, b, c = float(e0 @ e0), float(e0 @ eL), float(eL @ eL)

        def f(rho):
            ld = spectrum.log_det(rho)
            if not math.isfinite(ld):
                return -math.inf
            s2 = max(a - 2.0 * rho * b + rho * rho * c, 0.0) / n
            return const - 0.5 * n * math.log(s2) + ld if s2 > 0 else math.inf

    elif kind == ERROR:
        WX = w.lag(X)

        def f(lam):
            ld = spectrum.log_det(lam)
            if not math.isfinite(ld):
                return -math.inf
            e = _resid(X - lam * WX, y - lam * Wy)
            s2 = float(e @ e) / n
            return const - 0.5 * n * math.log(s2) + ld if s2 > 0 else math.inf

    else:
        raise ValueError(f"kind must be {LAG!r} or {ERROR!r}")
    return f


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden(f, a, b, tol):
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def _quadratic_refine(f, x, fx, lo, hi, step_tol):
    h = 1e-4
    for _ in range(100):
        h = min(h, 0.5 * (x - lo), 0.5 * (hi - x))
        fm, fp = f(x - h), f(x + h)
        curv = fp - 2.0 * fx + fm
        if not curv < 0.0:
            break
        step = -h * (fp - fm) / (2.0 * curv)
        step = max(-h, min(h, step))
        xn = x + step
        fn = f(xn)
        if not fn >= fx:
            break
        x, fx = xn, fn
        if abs(step) < step_tol:
            break
        h = max(min(h, 10.0 * abs(step)), 1e-6)
    return x, fx


def maximize_scalar(f, lo: float, hi: float, step_tol: float = 1e-8, grid: int = GRID_POINTS,
                    include=(0.0,)):
    """Maximize ``f`` on the open interval ``(lo, hi)``.

    A coarse grid brackets the global maximum, golden-section search narrows
    the bracket, and parabolic steps refine until ``|step| < step_tol``.
    Returns ``(x, f(x))``.
    """
    pts = lo + (hi - lo) * (np.arange(grid) + 0.5) / grid
    pts = np.sort(np.concatenate([pts, [p for p in include if lo < p < hi]]))
    vals = np.array([f(p) for p in pts])
    i = int(np.argmax(vals))
    a = pts[i - 1] if i > 0 else lo
    b = pts[i + 1] if i < len(pts) - 1 else hi
    x, fx = _golden(f, a, b, tol=1e-6 * (hi - lo))
    if vals[i] > fx:
        x, fx = pts[i], vals[i]
    return _quadratic_refine(f, x, fx, lo, hi, step_tol)


def numerical_hessian(f, theta, rel_step: float = 1e-5, scale=None) -> np.ndarray:
    """Central-difference Hessian with steps ``rel_step * max(|theta_i|, scale_i)``."""
    theta = np.asarray(theta, dtype=float)
    p = theta.shape[0]
    scale = np.ones(p) if scale is None else np.asarray(scale, dtype=float)
    h = rel_step * np.maximum(np.abs(theta), scale)
    H = np.empty((p, p))
    f0 = f(theta)
    for i in range(p):
        ei = np.zeros(p)
        ei[i] = h[i]
        H[i, i] = (f(theta + ei) - 2.0 * f0 + f(theta - ei)) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(p)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (
                f(theta + ei + ej) - f(theta + ei - ej) - f(theta - ei + ej) + f(theta - ei - ej)
            ) / (4.0 * h[i] * h[j])
    return H


@dataclass(frozen=True, eq=False)
class SpatialFit:
    kind: str
    names: tuple
    spatial_coef: float
    spatial_se: float
    spatial_z: float
    spatial_p: float
    coefficients: np.ndarray
    std_errors: np.ndarray
    z_stats: np.ndarray
    p_values: np.ndarray
    sigma2: float
    log_likelihood: float
    ols_log_likelihood: float
    pseudo_r2: float
    bp: TestStat
    residuals: np.ndarray
    fitted: np.ndarray
    interval: tuple
    n: int
    k: int

    @property
    def t_stats(self):
        return self.z_stats


def _full_loglik(kind, y, X, Wy, WX, spectrum):
    n = y.shape[0]
    k = X.shape[1]

    def f(theta):
        beta, coef, s2 = theta[:k], theta[k], theta[k + 1]
        ld = spectrum.log_det(coef)
        if s2 <= 0 or not math.isfinite(ld):
            return -math.inf
        if kind == LAG:
            e = y - coef * Wy - X @ beta
        else:
            e = (y - coef * Wy) - (X - coef * WX) @ beta
        return -0.5 * n * (_LOG_2PI + math.log(s2)) + ld - float(e @ e) / (2.0 * s2)

    return f


def _fit(kind, data: RegressionData, w, spectrum=None) -> SpatialFit:
    data.check_aligned(w)
    ols = ols_fit(data)
    spectrum = spectrum or spectrum_log_det(w)
    lo, hi = spectrum.interval
    f = concentrated_loglik(kind, data, w, spectrum)
    coef, loglik = maximize_scalar(f, lo, hi)
    if coef - lo < BOUNDARY_TOL or hi - coef < BOUNDARY_TOL:
        raise BoundarySolutionError(coef, (lo, hi))

    y, X = data.y, data.X
    n, k = X.shape
    Wy = w.lag(y)
    WX = w.lag(X)
    if kind == LAG:
        beta = _solve_ls(X, y - coef * Wy)
        resid = y - coef * Wy - X @ beta
        fitted = coef * Wy + X @ beta
    else:
        beta = _solve_ls(X - coef * WX, y - coef * Wy)
        resid = (y - coef * Wy) - (X - coef * WX) @ beta
        fitted = X @ beta
    s2 = float(resid @ resid) / n

    theta = np.concatenate([beta, [coef, s2]])
    scale = np.concatenate([np.maximum(ols.std_errors, 1e-12), [0.1, s2]])
    H = numerical_hessian(_full_loglik(kind, y, X, Wy, WX, spectrum), theta, scale=scale)
    try:
        cov = np.linalg.inv(-H)
    except np.linalg.LinAlgError:
        raise NumericalError("information matrix is singular") from None
    var = np.diag(cov)
    se = np.sqrt(np.where(var > 0, var, np.nan))
    z = theta / se
    p = np.array([norm_two_sided(v) if np.isfinite(v) else math.nan for v in z])
    r = np.corrcoef(fitted, y)[0, 1]
    return SpatialFit(
        kind=kind,
        names=data.names,
        spatial_coef=float(coef),
        spatial_se=float(se[k]),
        spatial_z=float(z[k]),
        spatial_p=float(p[k]),
        coefficients=beta,
        std_errors=se[:k],
        z_stats=z[:k],
        p_values=p[:k],
        sigma2=s2,
        log_likelihood=float(loglik),
        ols_log_likelihood=ols.log_likelihood,
        pseudo_r2=float(r * r),
        bp=heteroskedasticity_test(resid, X),
        residuals=resid,
        fitted=fitted,
        interval=(lo, hi),
        n=n,
        k=k,
    )


def fit_spatial_lag(data: RegressionData, w, spectrum: SpectrumLogDet | None = None) -> SpatialFit:
    """ML fit of ``y = rho W y + X beta + eps``."""
    return _fit(LAG, data, w, spectrum)


def fit_spatial_error(data: RegressionData, w, spectrum: SpectrumLogDet | None = None) -> SpatialFit:
    """ML fit of ``y = X beta + u`` with ``u = lambda W u + xi``."""
    return _fit(ERROR, data, w, spectrum)

