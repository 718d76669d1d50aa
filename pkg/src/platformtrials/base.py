"""Estimator base class shared by all analysis methods.

Analyses follow the scikit-learn estimator protocol: hyperparameters are
constructor arguments stored verbatim, ``fit(data, arm)`` runs the analysis
and sets ``result_`` (an AnalysisResult) plus flat ``p_val_`` style aliases,
and ``get_params``/``set_params`` come from BaseEstimator so a harness can
clone and reconfigure methods generically.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator

from .trial import AnalysisResult, TrialData, as_trial_data
from .validation import Checker


class TrialAnalysis(BaseEstimator):
    """Base class: treatment-versus-control analysis of one experimental arm."""

    method_name: str = ""

    def _analyze(self, data: TrialData, arm: int) -> AnalysisResult:
        raise NotImplementedError

    def _check_params(self, ck: Checker) -> None:
        """Subclass hook; add hyperparameter checks to ``ck``."""
        ck.require(isinstance(self.alpha, (int, float)) and 0.0 < self.alpha < 0.5,
                   "alpha", "must be a number in (0, 0.5)")

    def fit(self, data, arm: int = 1):
        """Analyze ``arm`` against control in ``data``; returns self.

        ``data`` is anything `as_trial_data` accepts: TrialData, a mapping of
        columns, or an object with j/response/treatment/period attributes.
        """
        ck = Checker()
        self._check_params(ck)
        ck.raise_if_failed()
        data = as_trial_data(data, getattr(self, "endpoint", "auto"))
        ck.require(isinstance(arm, int) and not isinstance(arm, bool) and arm >= 1,
                   "arm", "must be an integer >= 1")
        ck.raise_if_failed()
        if arm not in data.arms():
            ck.fail("arm", f"arm {arm} has no observations in the data")
        ck.raise_if_failed()

        result = self._analyze(data, arm)
        self.result_ = result
        self.p_val_ = result.p_val
        self.treat_effect_ = result.treat_effect
        self.lower_ci_ = result.lower_ci
        self.upper_ci_ = result.upper_ci
        self.reject_h0_ = result.reject_h0
        return self

    def fit_result(self, data, arm: int = 1) -> AnalysisResult:
        """Convenience: fit and hand back the AnalysisResult directly."""
        return self.fit(data, arm).result_
