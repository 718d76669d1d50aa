"""Period-adjusted and unadjusted regression analyses.

Three ways of comparing an experimental arm against control:

* FixedEffectModel: regression on every participant recruited before the arm
  left, with treatment dummies for all arms present and fixed period effects.
  Non-concurrent controls enter through the period adjustment; ``ncc=False``
  restricts to the arm's concurrent periods instead.
* SeparateModel: arm versus concurrent controls only, single indicator.
* PooledModel: arm versus all controls in the window, single indicator,
  no time adjustment (the naive use of non-concurrent controls).

Binary endpoints use logistic regression with normal Wald inference on the
log odds ratio; continuous endpoints use OLS with t inference.
"""

from __future__ import annotations

import numpy as np

from .base import TrialAnalysis
from .glm import design_matrix, fit_linear, fit_logistic, wald_one_sided
from .trial import AnalysisResult, TrialData
from .validation import Checker, ValidationError


def analysis_window(data: TrialData, arm: int, concurrent_only: bool) -> np.ndarray:
    """Boolean row mask: everything recruited up to the arm's last participant,
    optionally restricted to the arm's concurrent periods."""
    mask = data.j <= data.exit_index(arm)
    if concurrent_only:
        mask &= np.isin(data.period, data.concurrent_periods(arm))
    return mask


def _fit_and_test(data: TrialData, arm: int, mask: np.ndarray, arms_in_model,
                  with_periods: bool, alpha: float) -> AnalysisResult:
    treatment = data.treatment[mask]
    period = data.period[mask]
    y = data.response[mask]

    if not np.any(treatment == 0):
        raise ValidationError({"data": "no control observations in the analysis window"})

    levels = sorted(k for k in arms_in_model if np.any(treatment == k))
    period_levels = np.unique(period) if with_periods else [0]
    x, names = design_matrix(treatment, period, levels, list(period_levels))

    if data.binary:
        fit = fit_logistic(x, y, names)
    else:
        fit = fit_linear(x, y, names)

    idx = fit.index_of(f"treatment_{arm}")
    est = float(fit.coef[idx])
    se = float(fit.se[idx])
    p, lo, hi = wald_one_sided(est, se, alpha, df=fit.df_resid)
    return p, est, lo, hi, fit


class _RegressionAnalysis(TrialAnalysis):
    def __init__(self, alpha: float = 0.025, endpoint: str = "auto"):
        self.alpha = alpha
        self.endpoint = endpoint

    _concurrent_only = False
    _all_arms = True
    _with_periods = True

    def _analyze(self, data: TrialData, arm: int) -> AnalysisResult:
        mask = analysis_window(data, arm, self._concurrent_only)
        if self._all_arms:
            arms = [k for k in data.arms() if k != 0]
        else:
            # other experimental arms must not pose as controls
            mask &= np.isin(data.treatment, [0, arm])
            arms = [arm]
        p, est, lo, hi, fit = _fit_and_test(data, arm, mask, arms, self._with_periods, self.alpha)
        return AnalysisResult(
            p_val=p, treat_effect=est, lower_ci=lo, upper_ci=hi,
            reject_h0=p < self.alpha, method=self.method_name, arm=arm, alpha=self.alpha,
            diagnostics={"model": fit.coef_named(), "n_obs": int(mask.sum()),
                         "df_resid": fit.df_resid, "n_iter": fit.n_iter},
        )


class FixedEffectModel(_RegressionAnalysis):
    """Treatment-versus-control estimate adjusted by period fixed effects."""

    method_name = "fixmodel"

    def __init__(self, alpha: float = 0.025, ncc: bool = True, endpoint: str = "auto"):
        super().__init__(alpha=alpha, endpoint=endpoint)
        self.ncc = ncc

    def _check_params(self, ck: Checker) -> None:
        super()._check_params(ck)
        ck.require("ncc", isinstance(self.ncc, bool), "must be True or False")

    @property
    def _concurrent_only(self):
        return not self.ncc


class SeparateModel(_RegressionAnalysis):
    """Arm versus concurrent controls only; no period adjustment."""

    method_name = "sepmodel"
    _concurrent_only = True
    _all_arms = False
    _with_periods = False


class PooledModel(_RegressionAnalysis):
    """Arm versus all controls in the window; no period adjustment."""

    method_name = "poolmodel"
    _concurrent_only = False
    _all_arms = False
    _with_periods = False
