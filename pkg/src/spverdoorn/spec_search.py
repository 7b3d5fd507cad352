"""Classic specification search: OLS, spatial lag, or spatial error.

1. estimate by OLS; 2. compute the lag/error LM pair; 3. neither significant
gives OLS; 4. both significant picks the more significant one; 5./6. exactly
one significant picks that one. The LM pair is either the standard or the
robust statistics.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import IndeterminateError, ValidationError

__all__ = ["Choice", "StatsVariant", "TraceStep", "SpecDecision", "florax_select", "render_trace"]


class Choice(str, enum.Enum):
    OLS = "OLS"
    LAG = "LAG"
    ERROR = "ERROR"


class StatsVariant(str, enum.Enum):
    STANDARD = "STANDARD"
    ROBUST = "ROBUST"


@dataclass(frozen=True)
class TraceStep:
    step: int
    test: str
    statistic: float | None
    p_value: float | None
    outcome: str


@dataclass(frozen=True)
class SpecDecision:
    choice: Choice
    alpha: float
    stats_variant: StatsVariant
    trace: tuple


def _pair(report, variant):
    if variant is StatsVariant.STANDARD:
        return ("LM_lag", report.lm_lag), ("LM_error", report.lm_error)
    return ("RLM_lag", report.rlm_lag), ("RLM_error", report.rlm_error)


def florax_select(report, alpha: float = 0.05,
                  stats_variant: StatsVariant | str = StatsVariant.STANDARD) -> SpecDecision:
    """Choose a specification from the LM statistics in ``report``.

    ``report`` is anything exposing ``lm_lag``, ``lm_error``, ``rlm_lag`` and
    ``rlm_error`` as ``(statistic, p_value)`` pairs. When both tests are
    significant the smaller p-value wins; an exact tie goes to ERROR.
    """
    if not isinstance(stats_variant, StatsVariant):
        stats_variant = StatsVariant(str(stats_variant).upper())
    variant = stats_variant
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    (lag_name, lag), (err_name, err) = _pair(report, variant)
    trace = [TraceStep(1, "OLS", None, None, "initial model estimated")]

    bad = [name for name, t in ((lag_name, lag), (err_name, err))
           if t is None or math.isnan(t[0]) or math.isnan(t[1])]
    if bad:
        trace.append(TraceStep(2, "/".join(bad), math.nan, math.nan, "not computable"))
        raise IndeterminateError(
            f"{' and '.join(bad)} not computable; no {variant.value.lower()} decision", trace
        )
    lag_sig = lag[1] <= alpha
    err_sig = err[1] <= alpha
    for name, t, sig in ((lag_name, lag, lag_sig), (err_name, err, err_sig)):
        trace.append(TraceStep(2, name, float(t[0]), float(t[1]),
                               "significant" if sig else "not significant"))

    if not lag_sig and not err_sig:
        choice = Choice.OLS
        trace.append(TraceStep(3, "none significant", None, None, "keep OLS"))
    elif lag_sig and err_sig:
        if lag[1] < err[1]:
            choice, note = Choice.LAG, f"{lag_name} more significant"
        elif err[1] < lag[1]:
            choice, note = Choice.ERROR, f"{err_name} more significant"
        else:
            choice, note = Choice.ERROR, "tie in p-values, resolved toward ERROR"
        trace.append(TraceStep(4, "both significant", None, None, f"{note}, use {choice.value}"))
    elif lag_sig:
        choice = Choice.LAG
        trace.append(TraceStep(5, lag_name, float(lag[0]), float(lag[1]), "spatial lag"))
    else:
        choice = Choice.ERROR
        trace.append(TraceStep(6, err_name, float(err[0]), float(err[1]), "spatial error"))
    return SpecDecision(choice=choice, alpha=alpha, stats_variant=variant, trace=tuple(trace))


def render_trace(decision_or_trace) -> str:
    """One line per step: ``step N: <test> = <stat> (p = <p>) → <outcome>``."""
    trace = getattr(decision_or_trace, "trace", decision_or_trace)
    lines = []
    for s in trace:
        if s.statistic is None:
            lines.append(f"step {s.step}: {s.test} → {s.outcome}")
        else:
            lines.append(f"step {s.step}: {s.test} = {s.statistic:.6g} (p = {s.p_value:.6g}) → {s.outcome}")
    return "\n".join(lines)
