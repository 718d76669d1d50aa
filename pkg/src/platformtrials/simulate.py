"""Trial simulation: staggered entry, permuted-block randomization, responses.

One participant is recruited per time unit and assigned among the currently
active arms by permuted blocks of size ``period_blocks * len(active)``.  Blocks
restart at every period boundary; a block cut short by a boundary is discarded
(the already-assigned part stands).  An experimental arm exits right after its
``n_arm``-th allocation, which also closes the period.  The trial ends when the
last experimental arm exits, so the total sample size is emergent.
"""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .trends import evaluate_trend
from .trial import Period, PeriodMap, TrialConfig, TrialData


def block_randomize(active_arms, period_blocks: int, rng: np.random.Generator) -> Iterator[int]:
    """Yield an endless stream of permuted-block assignments over ``active_arms``.

    Every block of ``period_blocks * len(active_arms)`` assignments contains
    each active arm exactly ``period_blocks`` times.
    """
    arms = sorted(active_arms)
    if not arms or arms[0] != 0:
        raise ValueError("active arms must be nonempty and contain the control arm 0")
    base = np.repeat(arms, period_blocks)
    while True:
        for t in rng.permutation(base):
            yield int(t)


def _simulate_assignments(config: TrialConfig, rng: np.random.Generator):
    k_arms = config.num_arms
    entries = {k: config.entry_times[k - 1] + 1 for k in range(1, k_arms + 1)}
    not_entered = {k for k in entries if entries[k] > 1}
    active = {0} | {k for k in entries if entries[k] == 1}
    counts = [0] * (k_arms + 1)
    treatments: list[int] = []
    periods: list[Period] = []
    exits: dict[int, int] = {}
    period_start = 1
    stream = block_randomize(active, config.period_blocks, rng)

    j = 1
    while True:
        entering = {k for k in not_entered if entries[k] == j}
        if entering:
            not_entered -= entering
            if j > period_start:
                periods.append(Period(len(periods) + 1, period_start, j - 1, frozenset(active)))
                period_start = j
            active |= entering
            stream = block_randomize(active, config.period_blocks, rng)

        t = next(stream)
        treatments.append(t)
        counts[t] += 1
        if t > 0 and counts[t] == config.n_arm:
            exits[t] = j
            periods.append(Period(len(periods) + 1, period_start, j, frozenset(active)))
            active.discard(t)
            period_start = j + 1
            if not not_entered and active == {0}:
                break
            stream = block_randomize(active, config.period_blocks, rng)
        j += 1

    period_map = PeriodMap(tuple(periods))
    windows = {0: (1, j)}
    windows.update({k: (entries[k], exits[k]) for k in exits})
    return np.array(treatments, dtype=np.int64), period_map, windows


@dataclass(frozen=True)
class SimulatedTrial:
    """Full simulation output: data plus the generative quantities behind it."""

    data: TrialData
    model_value: np.ndarray  # per-participant response probability / mean
    trend_value: np.ndarray  # realized trend on the linear-predictor scale

    def to_json_dict(self) -> dict:
        pm = self.data.period_map
        return {
            "endpoint": self.data.endpoint,
            "n_participants": self.data.n_participants,
            "periods": [
                {"index": p.index, "start": p.start, "end": p.end, "active_arms": sorted(p.active_arms)}
                for p in pm
            ],
            "arm_windows": {str(a): list(w) for a, w in sorted(self.data.arm_windows.items())},
            "model_value": [float(v) for v in self.model_value],
            "trend_value": [float(v) for v in self.trend_value],
        }


def simulate_trial(config: TrialConfig, seed=None, full: bool = False):
    """Simulate one platform trial; returns TrialData (or SimulatedTrial if ``full``).

    Identical (config, seed) pairs produce identical data.  Assignments are
    drawn first; responses are then generated in one vectorized pass, since the
    trend functions need the realized trial length and period count.
    """
    config.validate()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    treatments, period_map, windows = _simulate_assignments(config, rng)
    n = len(treatments)
    j = np.arange(1, n + 1)
    period_labels = period_map.labels()

    lam = np.asarray(config.lambda_, dtype=np.float64)
    if np.any(lam != 0.0):
        base = evaluate_trend(config.trend, j, period_labels, 1.0, n, len(period_map),
                              n_peak=config.n_peak, n_wave=config.n_wave)
        trend = lam[treatments] * base
    else:
        trend = np.zeros(n)

    if config.binary:
        effect = np.concatenate(([0.0], np.log(config.effects)))
        eta = np.log(config.control_response / (1.0 - config.control_response)) + effect[treatments] + trend
        model_value = expit(eta)
        response = rng.binomial(1, model_value).astype(np.float64)
    else:
        effect = np.concatenate(([0.0], np.asarray(config.effects, dtype=np.float64)))
        model_value = config.control_response + effect[treatments] + trend
        response = model_value + rng.normal(0.0, config.sigma, n)

    data = TrialData(j=j, response=response, treatment=treatments, period=period_labels,
                     endpoint=config.endpoint, period_map=period_map, arm_windows=windows)
    if full:
        return SimulatedTrial(data=data, model_value=model_value, trend_value=trend)
    return data
