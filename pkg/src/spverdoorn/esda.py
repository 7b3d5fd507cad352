"""Exploratory spatial data analysis: Moran's I, LISA, Geary's C.

Inference is by random relabeling. All permutations for a call are drawn up
front from ``numpy.random.default_rng(seed)``, so results depend only on the
seed and never on how the kernel evaluates them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConstantVariableError, DimensionMismatchError, ValidationError

__all__ = [
    "PERMUTATIONS",
    "Quadrant",
    "MoranResult",
    "LisaResult",
    "ScatterData",
    "as_vector",
    "expected_moran",
    "global_moran",
    "local_moran_lisa",
    "geary_c",
    "moran_scatter_data",
]

PERMUTATIONS = 999
# simulated statistics within this distance of the observed one count as ties
_TIE_TOL = 1e-10


class Quadrant(str, enum.Enum):
    HIGH_HIGH = "HIGH_HIGH"
    LOW_LOW = "LOW_LOW"
    HIGH_LOW = "HIGH_LOW"
    LOW_HIGH = "LOW_HIGH"


def as_vector(x, w) -> np.ndarray:
    """Align ``x`` with the weights order.

    ``x`` is either a mapping ``{region_id: value}`` or a sequence already in
    ``w.ids`` order.
    """
    if hasattr(x, "keys"):
        missing = [rid for rid in w.ids if rid not in x]
        extra = [rid for rid in x if rid not in w._index]
        if missing or extra:
            raise DimensionMismatchError(
                f"variable/weights id mismatch: missing {missing}, unexpected {extra}"
            )
        x = [x[rid] for rid in w.ids]
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != w.n:
        raise DimensionMismatchError(f"variable of shape {x.shape} for {w.n} regions")
    if not np.all(np.isfinite(x)):
        raise ValidationError("variable contains missing or non-finite values")
    return x


def _deviations(x, w):
    x = as_vector(x, w)
    if w.n < 3:
        raise ValidationError("at least three regions are required")
    if np.ptp(x) == 0.0:
        raise ConstantVariableError("variable is constant; its variance is zero")
    return x - x.mean()


def expected_moran(n: int) -> float:
    """Null expectation ``-1/(n-1)`` of Moran's I."""
    if n < 2:
        raise ValidationError(f"expected Moran's I needs n >= 2, got {n}")
    return -1.0 / (n - 1)


def _check_permutations(permutations):
    if int(permutations) < 1:
        raise ValidationError("permutations must be a positive integer")
    return int(permutations)


@dataclass(frozen=True)
class MoranResult:
    I: float
    expected: float
    z_score: float
    pseudo_p: float
    permutations: int
    seed: int | None
    simulated: np.ndarray = field(repr=False, compare=False)


def _pseudo_p(sims, observed, center):
    dev = np.abs(observed - center)
    extreme = np.abs(sims - center) >= dev - _TIE_TOL
    return (extreme.sum(axis=-1) + 1.0) / (sims.shape[-1] + 1.0)


def global_moran(x, w, permutations: int = PERMUTATIONS, seed: int | None = 0) -> MoranResult:
    """Global Moran's I with two-sided permutation inference."""
    z = _deviations(x, w)
    m = _check_permutations(permutations)
    n = w.n
    s0 = w.total_weight()
    zz = float(z @ z)
    scale = n / (s0 * zz)
    observed = scale * float(z @ w.lag(z))
    rng = np.random.default_rng(seed)
    perms = rng.permuted(np.tile(np.arange(n), (m, 1)), axis=1)
    sims = scale * kernels.moran_numerators(z, w, perms)
    expected = expected_moran(n)
    sd = sims.std(ddof=1) if m > 1 else np.nan
    z_score = (observed - expected) / sd if sd > 0 else np.nan
    return MoranResult(
        I=observed,
        expected=expected,
        z_score=float(z_score),
        pseudo_p=float(_pseudo_p(sims, observed, expected)),
        permutations=m,
        seed=seed,
        simulated=sims,
    )


def _quadrant(zi, lag):
    if zi >= 0:
        return Quadrant.HIGH_HIGH if lag >= 0 else Quadrant.HIGH_LOW
    return Quadrant.LOW_HIGH if lag >= 0 else Quadrant.LOW_LOW


@dataclass(frozen=True)
class LisaResult:
    ids: tuple
    local_i: np.ndarray
    lag: np.ndarray
    pseudo_p: np.ndarray
    quadrant: tuple
    significant: np.ndarray
    alpha: float
    permutations: int
    seed: int | None

    def rows(self):
        """``(region_id, local_i, pseudo_p, quadrant, significant)`` tuples."""
        return [
            (rid, float(li), float(p), q.value, bool(s))
            for rid, li, p, q, s in zip(self.ids, self.local_i, self.pseudo_p, self.quadrant,
                                        self.significant)
        ]


def local_moran_lisa(x, w, permutations: int = PERMUTATIONS, seed: int | None = 0,
                     alpha: float = 0.05) -> LisaResult:
    """Local Moran statistics ``I_i = z_i * (W z)_i / sum(z**2)``.

    Inference holds ``z_i`` fixed and redistributes the other ``n - 1`` values
    over the neighbor positions of region ``i``. The p-value is two-sided
    around the conditional null mean ``-z_i**2 * sum_j w_ij / ((n-1) sum z**2)``.
    """
    z = _deviations(x, w)
    m = _check_permutations(permutations)
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError(f"alpha must lie in [0, 1], got {alpha}")
    n = w.n
    zz = float(z @ z)
    lag = w.lag(z)
    local = z * lag / zz

    rng = np.random.default_rng(seed)
    kmax = int(w.neighbor_counts().max(initial=0))
    draws = rng.permuted(np.tile(np.arange(n - 1), (m, 1)), axis=1)[:, :max(kmax, 1)]
    sim_lags = kernels.conditional_lags(z, w, np.ascontiguousarray(draws))
    sims = (z / zz)[:, None] * sim_lags
    center = -(z**2) * w.row_sums() / ((n - 1) * zz)
    p = _pseudo_p(sims, local[:, None], center[:, None]).ravel()
    return LisaResult(
        ids=w.ids,
        local_i=local,
        lag=lag,
        pseudo_p=p,
        quadrant=tuple(_quadrant(zi, li) for zi, li in zip(z, lag)),
        significant=p <= alpha,
        alpha=alpha,
        permutations=m,
        seed=seed,
    )


def geary_c(x, w) -> float:
    """Geary's C; values below 1 indicate positive spatial association."""
    z = _deviations(x, w)
    x = z  # differences are shift invariant
    rows = np.repeat(np.arange(w.n), w.neighbor_counts())
    num = float(np.sum(w.values * (x[rows] - x[w.indices]) ** 2))
    return (w.n - 1) / (2.0 * w.total_weight()) * num / float(z @ z)


@dataclass(frozen=True)
class ScatterData:
    ids: tuple
    z: np.ndarray
    lag: np.ndarray
    slope: float

    def pairs(self):
        return list(zip(self.z.tolist(), self.lag.tolist()))


def moran_scatter_data(x, w) -> ScatterData:
    """Standardized values against their spatial lags, plus the LS slope."""
    d = _deviations(x, w)
    z = d / d.std()
    lag = w.lag(z)
    slope = float(z @ (lag - lag.mean()) / (z @ z))
    return ScatterData(ids=w.ids, z=z, lag=lag, slope=slope)
