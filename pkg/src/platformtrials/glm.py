"""Regression engines for the frequentist analyses.

Small, purpose-built fitters instead of a full GLM framework: the analyses
need tight control over convergence criteria, separation detection, and the
exact one-sided Wald decision, which is why these are spelled out here.
Distribution functions come from scipy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit
from scipy.stats import norm, t as t_dist

MAX_ITER = 100
SCORE_TOL = 1e-8
DEVIANCE_RTOL = 1e-10
SEPARATION_BOUND = 15.0


class EstimationError(RuntimeError):
    """Base class for fit failures."""


class SingularDesignError(EstimationError):
    def __init__(self, message: str = "singular design"):
        super().__init__(message)


class SeparationError(EstimationError):
    def __init__(self, message: str = "separation detected"):
        super().__init__(message)


class DegenerateError(EstimationError):
    def __init__(self, message: str = "degenerate standard error"):
        super().__init__(message)


def norm_cdf(x):
    return norm.cdf(x)


def norm_quantile(p):
    return norm.ppf(p)


def t_cdf(x, df):
    return t_dist.cdf(x, df)


def t_quantile(p, df):
    return t_dist.ppf(p, df)


def design_matrix(treatment, period, treatment_levels, period_levels):
    """Dummy-coded design: intercept, one column per treatment level in
    ``treatment_levels``, and period indicators with the earliest period as
    reference (no period columns when only one period is present).

    Returns (X, names); names align with the fitted coefficient vector.
    """
    treatment = np.asarray(treatment)
    period = np.asarray(period)
    cols = [np.ones(len(treatment))]
    names = ["intercept"]
    for k in treatment_levels:
        cols.append((treatment == k).astype(np.float64))
        names.append(f"treatment_{k}")
    period_levels = sorted(period_levels)
    for c in period_levels[1:]:
        cols.append((period == c).astype(np.float64))
        names.append(f"period_{c}")
    return np.column_stack(cols), names


@dataclass
class FitResult:
    coef: np.ndarray
    cov: np.ndarray
    names: list[str]
    df_resid: int | None  # None for logistic (normal inference)
    n_iter: int = 0
    deviance: float = float("nan")
    extras: dict = field(default_factory=dict)

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))

    def coef_named(self) -> dict[str, float]:
        return {n: float(b) for n, b in zip(self.names, self.coef)}

    def index_of(self, name: str) -> int:
        return self.names.index(name)


def _check_rank(x: np.ndarray) -> None:
    if np.linalg.matrix_rank(x) < x.shape[1]:
        raise SingularDesignError()


def _logistic_deviance(eta: np.ndarray, y: np.ndarray) -> float:
    # -2 * loglik; softplus via logaddexp keeps large |eta| finite
    return float(-2.0 * np.sum(y * eta - np.logaddexp(0.0, eta)))


def fit_logistic(x: np.ndarray, y: np.ndarray, names: list[str]) -> FitResult:
    """Newton/IRLS logistic fit.

    Converges on max|score| < 1e-8 or relative deviance change < 1e-10 within
    100 iterations; the step is halved while it fails to decrease the deviance.
    Any |coefficient| above 15 on the logit scale is treated as separation.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_rank(x)
    n, p = x.shape
    beta = np.zeros(p)
    eta = x @ beta
    dev = _logistic_deviance(eta, y)
    trace = [dev]

    for it in range(1, MAX_ITER + 1):
        mu = expit(eta)
        score = x.T @ (y - mu)
        if np.max(np.abs(score)) < SCORE_TOL:
            return _finish_logistic(x, beta, mu, names, it - 1, dev, trace)
        w = mu * (1.0 - mu)
        xtwx = x.T @ (x * w[:, None])
        try:
            delta = np.linalg.solve(xtwx, score)
        except np.linalg.LinAlgError:
            raise SingularDesignError() from None
        step = 1.0
        for _ in range(30):
            cand = beta + step * delta
            cand_dev = _logistic_deviance(x @ cand, y)
            if cand_dev <= dev or not np.isfinite(dev):
                break
            step /= 2.0
        beta = beta + step * delta
        if np.max(np.abs(beta)) > SEPARATION_BOUND:
            raise SeparationError()
        eta = x @ beta
        new_dev = _logistic_deviance(eta, y)
        trace.append(new_dev)
        if abs(new_dev - dev) < DEVIANCE_RTOL * (abs(dev) + DEVIANCE_RTOL):
            dev = new_dev
            return _finish_logistic(x, beta, expit(eta), names, it, dev, trace)
        dev = new_dev

    raise EstimationError("logistic fit did not converge")


def _finish_logistic(x, beta, mu, names, n_iter, dev, trace) -> FitResult:
    w = mu * (1.0 - mu)
    xtwx = x.T @ (x * w[:, None])
    try:
        cov = np.linalg.inv(xtwx)
    except np.linalg.LinAlgError:
        raise SingularDesignError() from None
    if not np.all(np.isfinite(np.diag(cov))) or np.any(np.diag(cov) <= 0):
        raise DegenerateError()
    return FitResult(coef=beta, cov=cov, names=list(names), df_resid=None,
                     n_iter=n_iter, deviance=dev,
                     extras={"deviance_trace": list(trace)})


def fit_linear(x: np.ndarray, y: np.ndarray, names: list[str]) -> FitResult:
    """Ordinary least squares with the usual s^2 (X'X)^-1 covariance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_rank(x)
    n, p = x.shape
    if n <= p:
        raise DegenerateError()
    xtx = x.T @ x
    beta = np.linalg.solve(xtx, x.T @ y)
    resid = y - x @ beta
    rss = float(resid @ resid)
    df = n - p
    s2 = rss / df
    if s2 <= 0 or not np.isfinite(s2):
        raise DegenerateError()
    cov = s2 * np.linalg.inv(xtx)
    return FitResult(coef=beta, cov=cov, names=list(names), df_resid=df,
                     deviance=rss, extras={"sigma2": s2})


def wald_one_sided(estimate: float, se: float, alpha: float, df: int | None = None):
    """One-sided Wald test of H0: effect <= 0 plus a (1-2*alpha) interval.

    Normal reference when ``df`` is None, Student t otherwise.  Returns
    (p_val, lower, upper).
    """
    if not np.isfinite(se) or se <= 0.0:
        raise DegenerateError()
    z = estimate / se
    if df is None:
        p = float(1.0 - norm_cdf(z))
        q = float(norm_quantile(1.0 - alpha))
    else:
        p = float(1.0 - t_cdf(z, df))
        q = float(t_quantile(1.0 - alpha, df))
    return p, float(estimate - q * se), float(estimate + q * se)
