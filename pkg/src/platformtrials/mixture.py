"""One-dimensional normal mixture fitting by EM with AIC model selection.

Deterministic by construction: components initialize at the sample quantiles,
so the same draws always give the same mixture.  Used to condense predictive
draws into a closed-form prior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

MAX_EM_ITER = 500
EM_RTOL = 1e-9
SD_FLOOR = 1e-8


@dataclass(frozen=True)
class MixtureFit:
    weights: np.ndarray
    means: np.ndarray
    sds: np.ndarray
    loglik_trace: tuple[float, ...]

    @property
    def loglik(self) -> float:
        return self.loglik_trace[-1]

    @property
    def n_components(self) -> int:
        return len(self.weights)

    @property
    def aic(self) -> float:
        # 3m-1 free parameters: m weights constrained to sum 1, m means, m sds
        return 2.0 * (3 * self.n_components - 1) - 2.0 * self.loglik


def _log_density_matrix(x, weights, means, sds):
    # n x m matrix of log(w_k) + log N(x | mu_k, sd_k)
    z = (x[:, None] - means[None, :]) / sds[None, :]
    return (np.log(weights)[None, :] - np.log(sds)[None, :]
            - 0.5 * np.log(2.0 * np.pi) - 0.5 * z * z)


def fit_em(x: np.ndarray, m: int) -> MixtureFit:
    """Fit an m-component normal mixture; log-likelihood is nondecreasing."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    if n < 2:
        raise ValueError("mixture fitting needs at least 2 draws")
    if m < 1:
        raise ValueError("m must be >= 1")

    spread = float(np.std(x))
    floor = max(SD_FLOOR, 1e-4 * spread)
    means = np.quantile(x, (np.arange(m) + 0.5) / m)
    sds = np.full(m, max(spread, floor))
    weights = np.full(m, 1.0 / m)

    trace: list[float] = []
    for _ in range(MAX_EM_ITER):
        log_dens = _log_density_matrix(x, weights, means, sds)
        row_tot = logsumexp(log_dens, axis=1)
        ll = float(np.sum(row_tot))
        trace.append(ll)
        if len(trace) > 1 and ll - trace[-2] < EM_RTOL * (abs(trace[-2]) + 1.0):
            break
        resp = np.exp(log_dens - row_tot[:, None])
        nk = resp.sum(axis=0)
        nk = np.maximum(nk, 1e-300)
        weights = nk / n
        means = (resp * x[:, None]).sum(axis=0) / nk
        var = (resp * (x[:, None] - means[None, :]) ** 2).sum(axis=0) / nk
        sds = np.maximum(np.sqrt(var), floor)

    return MixtureFit(weights=weights, means=means, sds=sds, loglik_trace=tuple(trace))


def best_mixture(x: np.ndarray, max_components: int = 3) -> MixtureFit:
    """Fit 1..max_components and keep the AIC-best (ties favor fewer)."""
    fits = [fit_em(x, m) for m in range(1, max_components + 1)]
    best = fits[0]
    for f in fits[1:]:
        if f.aic < best.aic - 1e-12:
            best = f
    return best
