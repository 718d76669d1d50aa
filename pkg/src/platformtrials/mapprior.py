"""Meta-analytic predictive prior analysis with non-concurrent controls.

Pipeline: summarize the control data from periods before the studied arm
entered, fit a hierarchical model over those sources, turn the predictive
distribution of a new control parameter into a normal mixture, optionally
robustify it with a vague component, then run the concurrent comparison with
that mixture as the control prior.  Everything lives on the linear-predictor
scale: log-odds for binary endpoints, raw means for continuous ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import TrialAnalysis
from .mcmc import (ChainSettings, GibbsBlock, MetropolisBlock, PosteriorSamples,
                   binomial_cell_loglik, normal_cell_ss, run_chain)
from .mixture import best_mixture
from .trial import AnalysisResult, TrialData
from .validation import Checker

LOG_2PI = math.log(2.0 * math.pi)


class NoNonConcurrentControlsError(RuntimeError):
    def __init__(self, message: str = "no non-concurrent controls available"):
        super().__init__(message)


@dataclass(frozen=True)
class MixturePrior:
    """Normal mixture on the linear-predictor scale; weights sum to one."""

    components: tuple[tuple[float, float, float], ...]  # (weight, mean, sd)

    def __post_init__(self):
        if not self.components or len(self.components) > 4:
            raise ValueError("mixture must have 1 to 4 components")
        total = 0.0
        for w, _, sd in self.components:
            if w <= 0.0:
                raise ValueError("mixture weights must be positive")
            if sd <= 0.0:
                raise ValueError("mixture sds must be positive")
            total += w
        if abs(total - 1.0) > 1e-9:
            raise ValueError("mixture weights must sum to 1")

    def logpdf(self, x: float) -> float:
        terms = [math.log(w) - math.log(sd) - 0.5 * LOG_2PI - 0.5 * ((x - m) / sd) ** 2
                 for w, m, sd in self.components]
        top = max(terms)
        return top + math.log(sum(math.exp(t - top) for t in terms))

    @property
    def mean(self) -> float:
        return sum(w * m for w, m, _ in self.components)

    def to_json_dict(self) -> dict:
        return {"components": [{"weight": w, "mean": m, "sd": sd}
                               for w, m, sd in self.components]}


def robustify(prior: MixturePrior, weight: float, vague_sd: float) -> MixturePrior:
    """Mix the prior with a vague Normal(0, vague_sd^2) component of the given weight."""
    if not 0.0 <= weight <= 1.0:
        raise ValueError("robust weight must be in [0, 1]")
    if weight == 0.0:
        return prior
    if weight == 1.0:
        return MixturePrior(((1.0, 0.0, vague_sd),))
    scaled = tuple((w * (1.0 - weight), m, sd) for w, m, sd in prior.components)
    return MixturePrior(scaled + ((weight, 0.0, vague_sd),))


@dataclass(frozen=True)
class MapSettings:
    opt: int = 2
    prior_prec_tau: float = 4.0
    prior_prec_eta: float = 0.001
    robustify: bool = True
    weight: float = 0.1

    def __post_init__(self):
        ck = Checker()
        ck.require(self.opt in (1, 2), "opt", "must be 1 or 2")
        ck.positive_real(self.prior_prec_tau, "prior_prec_tau")
        ck.positive_real(self.prior_prec_eta, "prior_prec_eta")
        ck.require(isinstance(self.weight, (int, float)) and 0.0 <= self.weight <= 1.0,
                   "weight", "must be in [0, 1]")
        ck.raise_if_failed()


def _control_mask(data: TrialData) -> np.ndarray:
    return data.treatment == 0


def ncc_periods(data: TrialData, arm: int) -> list[int]:
    """Period indices strictly before the studied arm entered the platform."""
    first = data.concurrent_periods(arm)[0]
    return [p.index for p in data.period_map if p.index < first]


def ncc_sources(data: TrialData, arm: int, opt: int) -> list[dict]:
    """Per-period (opt=2) or pooled (opt=1) control summaries before arm entry.

    Binary sources carry (events, n); continuous ones (mean, sd, n) with a
    pooled-sd fallback for periods too small to estimate their own spread.
    """
    periods = ncc_periods(data, arm)
    ctrl = _control_mask(data)
    masks = [ctrl & (data.period == p) for p in periods]
    masks = [m for m in masks if np.any(m)]
    if not masks:
        raise NoNonConcurrentControlsError()
    if opt == 1:
        pooled = masks[0]
        for m in masks[1:]:
            pooled = pooled | m
        masks = [pooled]

    if data.binary:
        return [{"events": float(data.response[m].sum()), "n": int(m.sum())} for m in masks]

    all_ncc = data.response[np.logical_or.reduce(masks)]
    pooled_sd = float(np.std(all_ncc, ddof=1)) if len(all_ncc) > 1 else 0.0
    if not (pooled_sd > 0.0):
        pooled_sd = 1e-6
    out = []
    for m in masks:
        y = data.response[m]
        n = int(m.sum())
        sd = float(np.std(y, ddof=1)) if n > 1 else 0.0
        if not (sd > 0.0):
            sd = pooled_sd
        out.append({"mean": float(y.mean()), "sd": sd, "n": n})
    return out


def _observed_eta(source: dict, binary: bool) -> float:
    if binary:
        # continuity-corrected empirical logit
        e, n = source["events"], source["n"]
        return math.log((e + 0.5) / (n - e + 0.5))
    return source["mean"]


def derive_map_prior(sources: list[dict], settings: MapSettings, seed=None,
                     binary: bool = True, chain: ChainSettings | None = None) -> MixturePrior:
    """Hierarchical meta-analysis of the sources, then a mixture fit to the
    predictive draws of a new source's control parameter.

    Model: eta_s ~ N(mu, tau^2); mu ~ N(0, 1/prior_prec_eta); tau half-normal
    with sd prior_prec_tau^{-1/2}.  Binary sources contribute a binomial
    likelihood on the logit scale, continuous ones a normal likelihood for the
    source mean with plug-in standard error sd_s/sqrt(n_s).
    """
    if not sources:
        raise NoNonConcurrentControlsError()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    chain = chain or ChainSettings()
    s = len(sources)
    mu_var0 = 1.0 / settings.prior_prec_eta
    tau_sd0 = settings.prior_prec_tau ** -0.5

    obs = [_observed_eta(src, binary) for src in sources]
    tau_init = max(0.1, float(np.std(obs)) if s > 1 else 0.1)

    def tau_logp(state):
        tau = state["tau"]
        mu = state["mu"]
        ll = -0.5 * tau * tau / (tau_sd0 * tau_sd0)  # half-normal kernel
        for i in range(s):
            d = state[f"eta_{i}"] - mu
            ll += -math.log(tau) - 0.5 * d * d / (tau * tau)
        return ll

    def mu_draw(state, rng):
        tau2 = state["tau"] ** 2
        prec = 1.0 / mu_var0 + s / tau2
        mean = sum(state[f"eta_{i}"] for i in range(s)) / tau2 / prec
        return mean + rng.standard_normal() / math.sqrt(prec)

    blocks: list = [GibbsBlock("mu", mu_draw, float(np.mean(obs)))]
    blocks.append(MetropolisBlock("tau", tau_logp, tau_init, scale=0.5 * max(tau_init, tau_sd0),
                                  support=(0.0, math.inf)))

    if binary:
        def make_eta_logp(i, events, n):
            def logp(state):
                eta = state[f"eta_{i}"]
                tau = state["tau"]
                d = eta - state["mu"]
                return binomial_cell_loglik(eta, events, n) - 0.5 * d * d / (tau * tau)
            return logp

        for i, src in enumerate(sources):
            blocks.append(MetropolisBlock(f"eta_{i}", make_eta_logp(i, src["events"], src["n"]),
                                          obs[i], scale=0.5))
    else:
        def make_eta_draw(i, mean, se2):
            def draw(state, rng):
                tau2 = state["tau"] ** 2
                prec = 1.0 / tau2 + 1.0 / se2
                loc = (state["mu"] / tau2 + mean / se2) / prec
                return loc + rng.standard_normal() / math.sqrt(prec)
            return draw

        for i, src in enumerate(sources):
            se2 = src["sd"] ** 2 / src["n"]
            blocks.append(GibbsBlock(f"eta_{i}", make_eta_draw(i, src["mean"], se2), obs[i]))

    samples = run_chain(blocks, chain, rng)
    predictive = samples["mu"] + samples["tau"] * rng.standard_normal(chain.draws)
    fit = best_mixture(predictive, max_components=3)
    comps = tuple((float(w), float(m), float(sd))
                  for w, m, sd in zip(fit.weights, fit.means, fit.sds))
    return MixturePrior(comps)


def _cells(data: TrialData, mask: np.ndarray, binary: bool) -> dict:
    y = data.response[mask]
    if binary:
        return {"events": float(y.sum()), "n": float(len(y))}
    return {"n": float(len(y)), "sum_y": float(y.sum()), "sum_y2": float((y * y).sum())}


class MapPriorModel(TrialAnalysis):
    """Treatment-versus-control comparison borrowing non-concurrent controls
    through a (robustified) MAP prior on the control parameter."""

    method_name = "mapprior"

    def __init__(self, alpha: float = 0.025, opt: int = 2, prior_prec_tau: float = 4.0,
                 prior_prec_eta: float = 0.001, robustify: bool = True, weight: float = 0.1,
                 endpoint: str = "auto", burn_in: int = 5000, draws: int = 10000,
                 seed=None):
        self.alpha = alpha
        self.opt = opt
        self.prior_prec_tau = prior_prec_tau
        self.prior_prec_eta = prior_prec_eta
        self.robustify = robustify
        self.weight = weight
        self.endpoint = endpoint
        self.burn_in = burn_in
        self.draws = draws
        self.seed = seed

    def _check_params(self, ck: Checker) -> None:
        super()._check_params(ck)
        ck.require(self.opt in (1, 2), "opt", "must be 1 or 2")
        ck.positive_real(self.prior_prec_tau, "prior_prec_tau")
        ck.positive_real(self.prior_prec_eta, "prior_prec_eta")
        ck.require(isinstance(self.robustify, bool), "robustify", "must be True or False")
        ck.require(isinstance(self.weight, (int, float)) and 0.0 <= self.weight <= 1.0,
                   "weight", "must be in [0, 1]")
        ck.require(isinstance(self.burn_in, int) and self.burn_in >= 0,
                   "burn_in", "must be a nonnegative integer")
        ck.positive_int(self.draws, "draws")

    def _settings(self) -> MapSettings:
        return MapSettings(opt=self.opt, prior_prec_tau=self.prior_prec_tau,
                           prior_prec_eta=self.prior_prec_eta,
                           robustify=self.robustify, weight=self.weight)

    def _analyze(self, data: TrialData, arm: int) -> AnalysisResult:
        settings = self._settings()
        rng = np.random.default_rng(self.seed)
        chain = ChainSettings(burn_in=self.burn_in, draws=self.draws)

        sources = ncc_sources(data, arm, settings.opt)
        prior = derive_map_prior(sources, settings, seed=rng, binary=data.binary, chain=chain)
        vague_sd = settings.prior_prec_eta ** -0.5
        used = robustify(prior, settings.weight, vague_sd) if settings.robustify else prior

        conc = data.concurrent_periods(arm)
        cc_mask = _control_mask(data) & np.isin(data.period, conc)
        arm_mask = data.treatment == arm
        samples = _decision_chain(data, cc_mask, arm_mask, used, vague_sd, chain, rng)

        effect = samples["eta_t"] - samples["eta_c"]
        p = float(np.mean(effect <= 0.0))
        est = float(np.mean(effect))
        lo = float(np.quantile(effect, self.alpha))
        hi = float(np.quantile(effect, 1.0 - self.alpha))
        return AnalysisResult(
            p_val=p, treat_effect=est, lower_ci=lo, upper_ci=hi,
            reject_h0=p < self.alpha, method=self.method_name, arm=arm, alpha=self.alpha,
            diagnostics={"prior": used.to_json_dict(), "map_prior": prior.to_json_dict(),
                         "acceptance": samples.meta["acceptance"],
                         "n_cc": int(cc_mask.sum()), "n_arm_obs": int(arm_mask.sum())},
        )


def _decision_chain(data: TrialData, cc_mask, arm_mask, prior: MixturePrior,
                    vague_sd: float, chain: ChainSettings, rng) -> PosteriorSamples:
    """Concurrent comparison: control parameter under ``prior``, treatment
    parameter under the vague normal, shared response precision (continuous)."""
    binary = data.binary
    cc = _cells(data, cc_mask, binary)
    tr = _cells(data, arm_mask, binary)
    vague_var = vague_sd * vague_sd

    if binary:
        def eta_c_logp(state):
            return prior.logpdf(state["eta_c"]) + binomial_cell_loglik(
                state["eta_c"], cc["events"], cc["n"])

        def eta_t_logp(state):
            eta = state["eta_t"]
            return -0.5 * eta * eta / vague_var + binomial_cell_loglik(eta, tr["events"], tr["n"])

        init_c = math.log((cc["events"] + 0.5) / (cc["n"] - cc["events"] + 0.5))
        init_t = math.log((tr["events"] + 0.5) / (tr["n"] - tr["events"] + 0.5))
        blocks = [MetropolisBlock("eta_c", eta_c_logp, init_c, scale=0.3),
                  MetropolisBlock("eta_t", eta_t_logp, init_t, scale=0.3)]
        return run_chain(blocks, chain, rng)

    def eta_c_logp(state):
        phi = state["phi"]
        ss = normal_cell_ss(state["eta_c"], cc["n"], cc["sum_y"], cc["sum_y2"])
        return prior.logpdf(state["eta_c"]) - 0.5 * phi * ss

    def eta_t_draw(state, rng):
        phi = state["phi"]
        prec = 1.0 / vague_var + phi * tr["n"]
        loc = phi * tr["sum_y"] / prec
        return loc + rng.standard_normal() / math.sqrt(prec)

    def phi_draw(state, rng):
        ss = (normal_cell_ss(state["eta_c"], cc["n"], cc["sum_y"], cc["sum_y2"])
              + normal_cell_ss(state["eta_t"], tr["n"], tr["sum_y"], tr["sum_y2"]))
        shape = 0.001 + 0.5 * (cc["n"] + tr["n"])
        rate = 0.001 + 0.5 * ss
        return rng.gamma(shape, 1.0 / rate)

    y_all = data.response[cc_mask | arm_mask]
    var0 = float(np.var(y_all)) or 1.0
    blocks = [MetropolisBlock("eta_c", eta_c_logp, cc["sum_y"] / cc["n"], scale=0.3),
              GibbsBlock("eta_t", eta_t_draw, tr["sum_y"] / tr["n"]),
              GibbsBlock("phi", phi_draw, 1.0 / var0)]
    return run_chain(blocks, chain, rng)
