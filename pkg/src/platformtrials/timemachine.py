"""Bayesian Time Machine: bucketed time effects under a second-order
random-walk prior, sampled by Metropolis-within-Gibbs.

All participants up to the studied arm's exit enter the model
eta0 + theta_k + alpha_c(j).  Buckets count backward from the analysis time,
so the newest bucket is the reference (alpha_1 = 0) and the oldest may be
partial.  The random-walk precision tau and, for continuous endpoints, the
response precision phi have conjugate Gamma updates; locations move by
adaptive random-walk steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import TrialAnalysis
from .mcmc import (ChainSettings, GibbsBlock, MetropolisBlock,
                   binomial_cell_loglik, normal_cell_ss, run_chain)
from .trial import AnalysisResult, TrialData
from .validation import Checker


def bucketize(n_total: int, bucket_size: int) -> np.ndarray:
    """Bucket index per participant 1..n_total, counted backward: the most
    recent ``bucket_size`` participants form bucket 1, the oldest bucket may
    be partial.  Returns an int array of length n_total."""
    if n_total < 1 or bucket_size < 1:
        raise ValueError("n_total and bucket_size must be >= 1")
    j = np.arange(1, n_total + 1)
    return np.ceil((n_total - j + 1) / bucket_size).astype(np.int64)


@dataclass(frozen=True)
class TimeMachineSettings:
    prec_theta: float = 0.001
    prec_eta: float = 0.001
    tau_a: float = 0.1
    tau_b: float = 0.01
    bucket_size: int = 25
    prec_a: float = 0.001   # continuous response precision: Gamma shape
    prec_b: float = 0.001   # and rate

    def __post_init__(self):
        ck = Checker()
        for name in ("prec_theta", "prec_eta", "tau_a", "tau_b", "prec_a", "prec_b"):
            ck.positive_real(getattr(self, name), name)
        ck.positive_int(self.bucket_size, "bucket_size")
        ck.raise_if_failed()


def _window_cells(data: TrialData, arm: int, bucket_size: int):
    """Sufficient statistics per (treatment, bucket) cell inside the window."""
    n_w = data.exit_index(arm)
    mask = data.j <= n_w
    buckets = bucketize(n_w, bucket_size)
    treatment = data.treatment[mask]
    y = data.response[mask]
    n_buckets = int(buckets.max())
    arms = sorted(set(int(t) for t in treatment))
    cells = {}
    for k in arms:
        for c in range(1, n_buckets + 1):
            m = (treatment == k) & (buckets == c)
            if not np.any(m):
                continue
            yy = y[m]
            cells[(k, c)] = {"n": float(m.sum()), "sum_y": float(yy.sum()),
                             "events": float(yy.sum()), "sum_y2": float((yy * yy).sum())}
    return cells, arms, n_buckets, n_w


def _rw_ss(state: dict, n_buckets: int) -> float:
    """Sum of squared second-order random-walk increments of the alpha path
    (alpha_1 pinned at 0, so the first increment is just alpha_2)."""
    if n_buckets < 2:
        return 0.0
    alpha = [0.0, 0.0] + [state[f"alpha_{c}"] for c in range(2, n_buckets + 1)]
    ss = alpha[2] ** 2
    for c in range(3, n_buckets + 1):
        d = alpha[c] - 2.0 * alpha[c - 1] + alpha[c - 2]
        ss += d * d
    return ss


def _rw_kernel(state: dict, n_buckets: int) -> float:
    # log prior of the alpha path up to constants; tau's log terms are
    # constant during location updates and cancel in the MH ratio
    if n_buckets < 2:
        return 0.0
    return -0.5 * state["tau"] * _rw_ss(state, n_buckets)


class TimeMachineModel(TrialAnalysis):
    """Treatment effect with smooth bucketed time adjustment."""

    method_name = "timemachine"

    def __init__(self, alpha: float = 0.025, prec_theta: float = 0.001,
                 prec_eta: float = 0.001, tau_a: float = 0.1, tau_b: float = 0.01,
                 bucket_size: int = 25, prec_a: float = 0.001, prec_b: float = 0.001,
                 endpoint: str = "auto", burn_in: int = 5000, draws: int = 10000,
                 seed=None):
        self.alpha = alpha
        self.prec_theta = prec_theta
        self.prec_eta = prec_eta
        self.tau_a = tau_a
        self.tau_b = tau_b
        self.bucket_size = bucket_size
        self.prec_a = prec_a
        self.prec_b = prec_b
        self.endpoint = endpoint
        self.burn_in = burn_in
        self.draws = draws
        self.seed = seed

    def _check_params(self, ck: Checker) -> None:
        super()._check_params(ck)
        for name in ("prec_theta", "prec_eta", "tau_a", "tau_b", "prec_a", "prec_b"):
            ck.positive_real(getattr(self, name), name)
        ck.positive_int(self.bucket_size, "bucket_size")
        ck.positive_int(self.draws, "draws")
        ck.require(isinstance(self.burn_in, int) and self.burn_in >= 0,
                   "burn_in", "must be a nonnegative integer")

    def _settings(self) -> TimeMachineSettings:
        return TimeMachineSettings(prec_theta=self.prec_theta, prec_eta=self.prec_eta,
                                   tau_a=self.tau_a, tau_b=self.tau_b,
                                   bucket_size=self.bucket_size,
                                   prec_a=self.prec_a, prec_b=self.prec_b)

    def _analyze(self, data: TrialData, arm: int) -> AnalysisResult:
        st = self._settings()
        rng = np.random.default_rng(self.seed)
        chain = ChainSettings(burn_in=self.burn_in, draws=self.draws)
        cells, arms, n_buckets, n_w = _window_cells(data, arm, st.bucket_size)
        binary = data.binary
        exp_arms = [k for k in arms if k != 0]

        def cell_mean(state, k, c):
            eta = state["eta0"]
            if k != 0:
                eta += state[f"theta_{k}"]
            if c >= 2:
                eta += state[f"alpha_{c}"]
            return eta

        def lik_over(state, keys):
            ll = 0.0
            if binary:
                for key in keys:
                    cell = cells[key]
                    ll += binomial_cell_loglik(cell_mean(state, *key), cell["events"], cell["n"])
            else:
                phi = state["phi"]
                for key in keys:
                    cell = cells[key]
                    ll += -0.5 * phi * normal_cell_ss(cell_mean(state, *key),
                                                      cell["n"], cell["sum_y"], cell["sum_y2"])
            return ll

        all_keys = list(cells)
        arm_keys = {k: [key for key in all_keys if key[0] == k] for k in exp_arms}
        bucket_keys = {c: [key for key in all_keys if key[1] == c] for c in range(2, n_buckets + 1)}

        def eta0_logp(state):
            e = state["eta0"]
            return -0.5 * st.prec_eta * e * e + lik_over(state, all_keys)

        def make_theta_logp(k):
            def logp(state):
                t = state[f"theta_{k}"]
                return -0.5 * st.prec_theta * t * t + lik_over(state, arm_keys[k])
            return logp

        def make_alpha_logp(c):
            def logp(state):
                return _rw_kernel(state, n_buckets) + lik_over(state, bucket_keys[c])
            return logp

        def tau_draw(state, rng):
            ss = _rw_ss(state, n_buckets)
            return rng.gamma(st.tau_a + 0.5 * (n_buckets - 1), 1.0 / (st.tau_b + 0.5 * ss))

        def phi_draw(state, rng):
            ss = 0.0
            for key in all_keys:
                cell = cells[key]
                ss += normal_cell_ss(cell_mean(state, *key), cell["n"], cell["sum_y"], cell["sum_y2"])
            return rng.gamma(st.prec_a + 0.5 * n_w, 1.0 / (st.prec_b + 0.5 * ss))

        y_w = data.response[data.j <= n_w]
        if binary:
            rate = (y_w.sum() + 0.5) / (len(y_w) + 1.0)
            eta0_init = math.log(rate / (1.0 - rate))
        else:
            eta0_init = float(y_w.mean())

        blocks: list = [MetropolisBlock("eta0", eta0_logp, eta0_init, scale=0.3)]
        for k in exp_arms:
            blocks.append(MetropolisBlock(f"theta_{k}", make_theta_logp(k), 0.0, scale=0.3))
        for c in range(2, n_buckets + 1):
            blocks.append(MetropolisBlock(f"alpha_{c}", make_alpha_logp(c), 0.0, scale=0.3))
        if n_buckets >= 2:
            blocks.append(GibbsBlock("tau", tau_draw, self.tau_a / self.tau_b))
        if not binary:
            var0 = float(np.var(y_w)) or 1.0
            blocks.append(GibbsBlock("phi", phi_draw, 1.0 / var0))

        samples = run_chain(blocks, chain, rng)
        summ = samples.summarize(f"theta_{arm}", self.alpha)
        bucket_effects = [{"bucket": 1, "mean": 0.0, "lower": 0.0, "upper": 0.0}]
        for c in range(2, n_buckets + 1):
            s = samples.summarize(f"alpha_{c}", self.alpha)
            bucket_effects.append({"bucket": c, "mean": s["mean"],
                                   "lower": s["lower"], "upper": s["upper"]})

        return AnalysisResult(
            p_val=summ["tail_prob"], treat_effect=summ["mean"],
            lower_ci=summ["lower"], upper_ci=summ["upper"],
            reject_h0=summ["tail_prob"] < self.alpha,
            method=self.method_name, arm=arm, alpha=self.alpha,
            diagnostics={"n_buckets": n_buckets, "n_window": n_w,
                         "bucket_effects": bucket_effects,
                         "acceptance": samples.meta["acceptance"]},
        )
