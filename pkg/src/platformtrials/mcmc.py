"""Metropolis-within-Gibbs sampler used by the Bayesian analyses.

Scalar parameters are updated one at a time, either by an adaptive random-walk
Metropolis step (given that parameter's conditional log density up to a
constant) or by an exact Gibbs draw for conjugate blocks.  Proposal scales
adapt toward a 0.44 acceptance rate during burn-in only, so the kept draws
come from a fixed kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

TARGET_ACCEPT = 0.44


class DivergentChainError(RuntimeError):
    pass


def softplus(x: float) -> float:
    # log(1 + exp(x)) without overflow
    return max(x, 0.0) + math.log1p(math.exp(-abs(x)))


def binomial_cell_loglik(eta: float, events: float, n: float) -> float:
    """Log-likelihood of a binomial cell on the logit scale, up to a constant."""
    return events * eta - n * softplus(eta)


def normal_cell_ss(eta: float, n: float, sum_y: float, sum_y2: float) -> float:
    """Sum of squared deviations of a cell's responses from ``eta``."""
    return sum_y2 - 2.0 * eta * sum_y + n * eta * eta


@dataclass
class MetropolisBlock:
    """Random-walk update for one scalar parameter.

    ``logp(state)`` returns that parameter's conditional log density up to an
    additive constant; ``support`` bounds, when given, auto-reject proposals
    outside the open interval.
    """

    name: str
    logp: Callable[[dict], float]
    init: float
    scale: float = 0.5
    support: tuple[float, float] | None = None


@dataclass
class GibbsBlock:
    """Exact conditional draw: ``draw(state, rng)`` returns the new value."""

    name: str
    draw: Callable[[dict, np.random.Generator], float]
    init: float


@dataclass(frozen=True)
class ChainSettings:
    burn_in: int = 5000
    draws: int = 10000
    thin: int = 1
    adapt_interval: int = 50

    def __post_init__(self):
        if self.burn_in < 0 or self.draws < 1 or self.thin < 1 or self.adapt_interval < 1:
            raise ValueError("chain settings must be positive (burn_in may be 0)")


@dataclass
class PosteriorSamples:
    draws: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.draws[name]

    def summarize(self, name: str, alpha: float) -> dict:
        """Posterior mean, equal-tail (1-2*alpha) interval, and P(param <= 0)."""
        x = self.draws[name]
        return {
            "tail_prob": float(np.mean(x <= 0.0)),
            "mean": float(np.mean(x)),
            "lower": float(np.quantile(x, alpha)),
            "upper": float(np.quantile(x, 1.0 - alpha)),
        }

    def to_csv(self, path) -> None:
        names = list(self.draws)
        rows = np.column_stack([self.draws[n] for n in names])
        header = ",".join(["iter"] + names)
        lines = [header]
        for i, row in enumerate(rows):
            lines.append(",".join([str(i + 1)] + [repr(float(v)) for v in row]))
        text = "\n".join(lines) + "\n"
        if hasattr(path, "write"):
            path.write(text)
        else:
            with open(path, "w") as fh:
                fh.write(text)


def mcse(x: np.ndarray, n_batches: int = 20) -> float:
    """Batch-means Monte Carlo standard error of the mean."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    if n < 2 * n_batches:
        return float(np.std(x, ddof=1) / math.sqrt(n))
    size = n // n_batches
    means = x[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(n_batches))


def run_chain(blocks: list, settings: ChainSettings, rng: np.random.Generator) -> PosteriorSamples:
    """Run one chain over ``blocks`` (updated in order each sweep).

    Raises ValueError when a Metropolis block starts at non-finite density and
    DivergentChainError if one turns NaN mid-run.
    """
    state = {b.name: float(b.init) for b in blocks}
    mh = [b for b in blocks if isinstance(b, MetropolisBlock)]
    log_scale = {b.name: math.log(b.scale) for b in mh}
    cur_lp = {}
    for b in mh:
        lp = b.logp(state)
        if not math.isfinite(lp):
            raise ValueError(f"initial state has non-finite log density for block '{b.name}'")
        cur_lp[b.name] = lp

    accepts = {b.name: 0 for b in mh}
    window_accepts = {b.name: 0 for b in mh}
    adapt_round = 0
    total_iters = settings.burn_in + settings.draws * settings.thin
    kept = {b.name: np.empty(settings.draws) for b in blocks}
    k = 0

    for it in range(1, total_iters + 1):
        burning = it <= settings.burn_in
        for b in blocks:
            if isinstance(b, GibbsBlock):
                state[b.name] = float(b.draw(state, rng))
                # conditionals of downstream MH blocks shifted; recompute lazily below
                for m in mh:
                    cur_lp[m.name] = None
                continue
            if cur_lp[b.name] is None:
                cur_lp[b.name] = b.logp(state)
            old = state[b.name]
            old_lp = cur_lp[b.name]
            cand = old + math.exp(log_scale[b.name]) * rng.standard_normal()
            if b.support is not None and not (b.support[0] < cand < b.support[1]):
                continue
            state[b.name] = cand
            cand_lp = b.logp(state)
            if math.isnan(cand_lp):
                raise DivergentChainError(f"log density became NaN in block '{b.name}'")
            if math.log(rng.uniform()) < cand_lp - old_lp:
                cur_lp[b.name] = cand_lp
                accepts[b.name] += 1
                if burning:
                    window_accepts[b.name] += 1
                # other blocks' conditionals depend on this value
                for m in mh:
                    if m.name != b.name:
                        cur_lp[m.name] = None
            else:
                state[b.name] = old

        if burning and it % settings.adapt_interval == 0:
            adapt_round += 1
            step = min(0.25, 2.0 / math.sqrt(adapt_round))
            for b in mh:
                rate = window_accepts[b.name] / settings.adapt_interval
                log_scale[b.name] += step * (rate - TARGET_ACCEPT)
                window_accepts[b.name] = 0

        if not burning and (it - settings.burn_in) % settings.thin == 0:
            for b in blocks:
                kept[b.name][k] = state[b.name]
            k += 1

    meta = {
        "acceptance": {b.name: accepts[b.name] / total_iters for b in mh},
        "scale": {b.name: math.exp(log_scale[b.name]) for b in mh},
        "burn_in": settings.burn_in,
        "draws": settings.draws,
        "thin": settings.thin,
    }
    return PosteriorSamples(draws=kept, meta=meta)
