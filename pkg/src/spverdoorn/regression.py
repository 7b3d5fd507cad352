"""OLS estimation and the residual diagnostic battery.

Two variance conventions coexist on purpose: standard errors use the
unbiased ``e'e / (n - k)``, while the likelihood and every LM statistic use
the ML estimate ``e'e / n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._stats import chi2_sf, t_two_sided
from .errors import (
    DegenerateResidualsError,
    DimensionMismatchError,
    InsufficientObservationsError,
    RankDeficientError,
    ValidationError,
)
from .esda import PERMUTATIONS, global_moran

__all__ = [
    "TestStat",
    "RegressionData",
    "OlsFit",
    "LMTests",
    "DiagnosticsReport",
    "ols_fit",
    "gaussian_loglik",
    "jarque_bera",
    "heteroskedasticity_test",
    "breusch_pagan",
    "lm_tests",
    "lm_diagnostics",
    "wald_coefficient_test",
]


class TestStat(NamedTuple):
    """A test statistic and its p-value; both NaN when not computable."""

    statistic: float
    p_value: float

    @property
    def computable(self) -> bool:
        return not math.isnan(self.statistic)

    @classmethod
    def not_computable(cls) -> "TestStat":
        return cls(math.nan, math.nan)


@dataclass(frozen=True, eq=False)
class RegressionData:
    """``y`` on ``X``; ``X`` carries the intercept as its first column."""

    y: np.ndarray
    X: np.ndarray
    ids: tuple
    names: tuple = ()
    y_name: str = "y"

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if y.ndim != 1 or X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise DimensionMismatchError(f"y of shape {y.shape} and X of shape {X.shape}")
        if len(self.ids) != y.shape[0]:
            raise DimensionMismatchError(f"{len(self.ids)} ids for {y.shape[0]} observations")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise ValidationError("regression data contain non-finite values")
        names = tuple(self.names) or ("CONSTANT",) + tuple(f"x{j}" for j in range(1, X.shape[1]))
        if len(names) != X.shape[1]:
            raise DimensionMismatchError(f"{len(names)} names for {X.shape[1]} columns")
        y.setflags(write=False)
        X.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "names", names)

    @classmethod
    def with_intercept(cls, y, regressors, ids, names=None, y_name="y") -> "RegressionData":
        """Build from regressor columns, prepending a column of ones."""
        R = np.asarray(regressors, dtype=float)
        if R.ndim == 1:
            R = R[:, None]
        X = np.column_stack([np.ones(R.shape[0]), R])
        if names is None:
            names = tuple(f"x{j}" for j in range(1, X.shape[1]))
        return cls(y=y, X=X, ids=tuple(ids), names=("CONSTANT",) + tuple(names), y_name=y_name)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def k(self) -> int:
        return self.X.shape[1]

    def check_aligned(self, w) -> None:
        if tuple(w.ids) != self.ids:
            raise DimensionMismatchError("observation order does not match the weights order")


def gaussian_loglik(sigma2_ml: float, n: int) -> float:
    """Log-likelihood of a Gaussian regression evaluated at its ML variance."""
    return -0.5 * n * (math.log(2.0 * math.pi) + math.log(sigma2_ml) + 1.0)


@dataclass(frozen=True, eq=False)
class OlsFit:
    names: tuple
    coefficients: np.ndarray
    std_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray
    sigma2: float
    sigma2_ml: float
    r2: float
    r2_adj: float
    log_likelihood: float
    n: int
    k: int
    xtx_inv: np.ndarray

    @property
    def df_resid(self) -> int:
        return self.n - self.k


def _solve_ls(X, y):
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise RankDeficientError(
            f"design matrix has rank {rank} < {X.shape[1]} columns (collinear or constant regressor)"
        )
    return coef


def ols_fit(data: RegressionData) -> OlsFit:
    X, y = data.X, data.y
    n, k = X.shape
    if n <= k:
        raise InsufficientObservationsError(f"{n} observations for {k} parameters")
    coef = _solve_ls(X, y)
    fitted = X @ coef
    e = y - fitted
    ee = float(e @ e)
    sigma2 = ee / (n - k)
    sigma2_ml = ee / n
    xtx_inv = np.linalg.inv(X.T @ X)
    se = np.sqrt(sigma2 * np.diag(xtx_inv))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = coef / se
    p = np.array([math.nan if math.isnan(ti) else t_two_sided(ti, n - k) for ti in t])
    tss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ee / tss if tss > 0 else math.nan
    r2_adj = 1.0 - (1.0 - r2) * (n - 1) / (n - k) if tss > 0 else math.nan
    loglik = gaussian_loglik(sigma2_ml, n) if sigma2_ml > 0 else math.inf
    return OlsFit(
        names=data.names,
        coefficients=coef,
        std_errors=se,
        t_stats=t,
        p_values=p,
        residuals=e,
        fitted=fitted,
        sigma2=sigma2,
        sigma2_ml=sigma2_ml,
        r2=r2,
        r2_adj=r2_adj,
        log_likelihood=loglik,
        n=n,
        k=k,
        xtx_inv=xtx_inv,
    )


def jarque_bera(residuals) -> TestStat:
    """Jarque-Bera normality test from the 2nd-4th sample moments."""
    e = np.asarray(residuals, dtype=float)
    n = e.shape[0]
    if n < 4:
        raise InsufficientObservationsError("Jarque-Bera needs at least 4 residuals")
    d = e - e.mean()
    m2 = float(np.mean(d**2))
    if m2 == 0.0 or np.ptp(e) == 0.0:
        raise DegenerateResidualsError("residuals have zero variance")
    skew = float(np.mean(d**3)) / m2**1.5
    kurt = float(np.mean(d**4)) / m2**2
    jb = n / 6.0 * (skew**2 + (kurt - 3.0) ** 2 / 4.0)
    return TestStat(jb, chi2_sf(jb, 2))


def heteroskedasticity_test(residuals, Z, studentized: bool = False) -> TestStat:
    """Breusch-Pagan (``studentized=False``) or Koenker-Bassett statistic.

    ``Z`` holds the auxiliary regressors, intercept first. Both variants are
    the explained sum of squares of ``e**2`` on ``Z``; BP scales it by
    ``2 * sigma**4`` (normal fourth moment), KB by the sample variance of
    ``e**2``.
    """
    e2 = np.asarray(residuals, dtype=float) ** 2
    Z = np.asarray(Z, dtype=float)
    df = Z.shape[1] - 1
    if df < 1:
        raise ValidationError("auxiliary regression needs at least one non-constant regressor")
    if np.ptp(e2) == 0.0:
        return TestStat(0.0, 1.0)
    coef = _solve_ls(Z, e2)
    fitted = Z @ coef
    ess = float(np.sum((fitted - e2.mean()) ** 2))
    s2 = float(e2.mean())
    if studentized:
        stat = ess / float(np.mean((e2 - s2) ** 2))
    else:
        stat = ess / (2.0 * s2**2)
    return TestStat(stat, chi2_sf(stat, df))


def breusch_pagan(fit: OlsFit, data: RegressionData, studentized: bool = False) -> TestStat:
    return heteroskedasticity_test(fit.residuals, data.X, studentized=studentized)


@dataclass(frozen=True)
class LMTests:
    lm_lag: TestStat
    rlm_lag: TestStat
    lm_error: TestStat
    rlm_error: TestStat

    @classmethod
    def from_statistics(cls, lm_lag, lm_error, rlm_lag=math.nan, rlm_error=math.nan) -> "LMTests":
        """Wrap published chi-square(1) statistics, deriving their p-values."""

        def wrap(x):
            return TestStat.not_computable() if math.isnan(x) else TestStat(float(x), chi2_sf(x, 1))

        return cls(lm_lag=wrap(lm_lag), rlm_lag=wrap(rlm_lag), lm_error=wrap(lm_error),
                   rlm_error=wrap(rlm_error))


def _trace_term(W):
    return float(np.sum(W * W) + np.sum(W * W.T))


def lm_tests(fit: OlsFit, data: RegressionData, w) -> LMTests:
    """The LM and robust LM tests for an omitted spatial lag or spatial error.

    ``D - T <= 0`` (the spatial lag of the fit lies in the column space of
    ``X``) leaves both robust statistics undefined; they are returned as
    not computable.
    """
    data.check_aligned(w)
    W = w.dense()
    e = fit.residuals
    n = data.n
    s2 = float(e @ e) / n
    T = _trace_term(W)
    d_lag = float(e @ (W @ data.y)) / s2
    d_err = float(e @ (W @ e)) / s2
    wxb = W @ (data.X @ fit.coefficients)
    proj = data.X @ (fit.xtx_inv @ (data.X.T @ wxb))
    mwxb = wxb - proj
    D = float(mwxb @ mwxb) / s2 + T

    lm_lag = d_lag**2 / D
    lm_err = d_err**2 / T if T > 0 else math.nan
    if D - T > 1e-12 * D:
        rlm_lag = (d_lag - d_err) ** 2 / (D - T)
        rlm_err = (d_err - T / D * d_lag) ** 2 / (T * (1.0 - T / D))
        rl, re = TestStat(rlm_lag, chi2_sf(rlm_lag, 1)), TestStat(rlm_err, chi2_sf(rlm_err, 1))
    else:
        rl = re = TestStat.not_computable()
    return LMTests(
        lm_lag=TestStat(lm_lag, chi2_sf(lm_lag, 1)),
        rlm_lag=rl,
        lm_error=TestStat(lm_err, chi2_sf(lm_err, 1)) if T > 0 else TestStat.not_computable(),
        rlm_error=re,
    )


@dataclass(frozen=True)
class DiagnosticsReport:
    jb: TestStat
    bp: TestStat
    kb: TestStat
    moran_resid_I: TestStat
    lm_lag: TestStat
    rlm_lag: TestStat
    lm_error: TestStat
    rlm_error: TestStat

    def as_dict(self) -> dict:
        return {name: tuple(getattr(self, name)) for name in self.__dataclass_fields__}


def lm_diagnostics(fit: OlsFit, data: RegressionData, w, permutations: int = PERMUTATIONS,
                   seed: int | None = 0) -> DiagnosticsReport:
    """Full residual battery: JB, BP, KB, Moran's I of residuals, LM tests."""
    lm = lm_tests(fit, data, w)
    moran = global_moran(fit.residuals, w, permutations=permutations, seed=seed)
    return DiagnosticsReport(
        jb=jarque_bera(fit.residuals),
        bp=breusch_pagan(fit, data),
        kb=breusch_pagan(fit, data, studentized=True),
        moran_resid_I=TestStat(moran.I, moran.pseudo_p),
        lm_lag=lm.lm_lag,
        rlm_lag=lm.rlm_lag,
        lm_error=lm.lm_error,
        rlm_error=lm.rlm_error,
    )


def wald_coefficient_test(fit, index: int, hypothesized: float = 0.0) -> float:
    """``(coef - hypothesized) / se`` for one coefficient of an OLS or ML fit."""
    k = len(fit.coefficients)
    if not -k <= index < k:
        raise IndexError(f"coefficient index {index} out of range for {k} coefficients")
    return float((fit.coefficients[index] - hypothesized) / fit.std_errors[index])
