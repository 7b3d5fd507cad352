"""Tail probabilities for the reference distributions used by the tests."""

import math

from scipy import special

__all__ = ["chi2_sf", "norm_sf", "norm_two_sided", "t_two_sided"]

# underflowed tails are reported as the smallest positive double so that
# p-values stay in (0, 1]
_TINY = 5e-324


def chi2_sf(x: float, df: int) -> float:
    """Upper tail of chi-square(df)."""
    if not math.isfinite(x):
        return math.nan
    if x <= 0.0:
        return 1.0
    if df == 1:
        p = math.erfc(math.sqrt(x / 2.0))
    elif df == 2:
        p = math.exp(-x / 2.0)
    else:
        p = float(special.gammaincc(df / 2.0, x / 2.0))
    return max(p, _TINY)


def norm_sf(z: float) -> float:
    return max(0.5 * math.erfc(z / math.sqrt(2.0)), _TINY)


def norm_two_sided(z: float) -> float:
    return max(math.erfc(abs(z) / math.sqrt(2.0)), _TINY)


def t_two_sided(t: float, df: int) -> float:
    return max(float(2.0 * special.stdtr(df, -abs(t))), _TINY)
