"""Deterministic time-trend functions for the generative trial model.

All trends are anchored at zero for the first participant and applied on the
linear-predictor scale (log-odds for binary endpoints, mean for continuous).
For the linear and stepwise shapes the strength is the total drift over the
trial; for the seasonal shape it is the amplitude.
"""

from __future__ import annotations

import numpy as np

from .trial import TREND_KINDS
from .validation import ValidationError


def _check_window(n_total: int) -> None:
    if n_total < 2:
        raise ValueError("degenerate trend window: need at least 2 participants")


def linear_trend(j, strength: float, n_total: int):
    """Linear drift from 0 at j=1 to ``strength`` at j=N."""
    _check_window(n_total)
    return strength * (np.asarray(j, dtype=np.float64) - 1.0) / (n_total - 1.0)


def stepwise_trend(period_index, strength: float, n_periods: int):
    """Constant within periods, stepping from 0 up to ``strength`` in the last period."""
    c = np.asarray(period_index, dtype=np.float64)
    if n_periods <= 1:
        return np.zeros_like(c)
    return strength * (c - 1.0) / (n_periods - 1.0)


def inverted_u_trend(j, strength: float, peak: int, n_total: int):
    """Linear rise to participant ``peak``, then a mirror-symmetric fall."""
    _check_window(n_total)
    if not 1 <= peak <= n_total:
        raise ValidationError({"N_peak": f"must lie in 1..{n_total}, got {peak}"})
    j = np.asarray(j, dtype=np.float64)
    rising = strength * (j - 1.0) / (n_total - 1.0)
    falling = strength * (2.0 * peak - j - 1.0) / (n_total - 1.0)
    return np.where(j <= peak, rising, falling)


def seasonal_trend(j, strength: float, n_waves: int, n_total: int):
    """Sinusoid with ``n_waves`` full cycles over the trial and amplitude ``strength``."""
    _check_window(n_total)
    j = np.asarray(j, dtype=np.float64)
    return strength * np.sin(2.0 * np.pi * n_waves * (j - 1.0) / (n_total - 1.0))


def evaluate_trend(kind: str, j, period_index, strength: float, n_total: int,
                   n_periods: int, n_peak: int | None = None, n_wave: int | None = None):
    """Trend value per participant for one arm's strength.

    ``j`` and ``period_index`` are parallel arrays; the stepwise shape uses the
    period, all others the recruitment index.
    """
    if kind not in TREND_KINDS:
        raise ValidationError({"trend": f"must be one of {TREND_KINDS}, got {kind!r}"})
    if strength == 0.0:
        return np.zeros(np.shape(j), dtype=np.float64)
    if kind == "linear":
        return linear_trend(j, strength, n_total)
    if kind == "stepwise":
        return stepwise_trend(period_index, strength, n_periods)
    if kind == "inv_u":
        return inverted_u_trend(j, strength, n_peak, n_total)
    return seasonal_trend(j, strength, n_wave, n_total)
