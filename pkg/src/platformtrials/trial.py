"""Domain types for platform trials.

A platform trial recruits one participant per time unit and allocates them
among the arms that are currently active (arm 0 is the shared control and is
active throughout).  The trial timeline splits into *periods*: maximal runs of
recruitment indices over which the set of active arms is constant.  Controls
recruited before an experimental arm entered are that arm's non-concurrent
controls; controls recruited while it was active are its concurrent controls.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .validation import Checker, ValidationError

TREND_KINDS = ("linear", "stepwise", "inv_u", "seasonal")
ENDPOINTS = ("binary", "continuous")

CSV_HEADER = ("j", "response", "treatment", "period")


@dataclass(frozen=True)
class TrialConfig:
    """Full generative specification of one platform trial.

    ``effects`` holds odds ratios for binary endpoints and mean differences
    for continuous ones; ``control_response`` is the control rate ``p0`` or
    control mean ``mu0`` accordingly.  ``entry_times`` gives, per experimental
    arm, the number of participants recruited before the arm joins, so arm k
    is active from participant ``entry_times[k-1] + 1`` until its ``n_arm``-th
    allocation.  ``lambda_`` has one trend strength per arm, index 0 = control.
    """

    endpoint: str
    num_arms: int
    n_arm: int
    entry_times: tuple[int, ...]
    control_response: float
    effects: tuple[float, ...]
    lambda_: tuple[float, ...]
    trend: str = "linear"
    sigma: float | None = None
    period_blocks: int = 2
    n_peak: int | None = None
    n_wave: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "entry_times", tuple(self.entry_times))
        object.__setattr__(self, "effects", tuple(self.effects))
        object.__setattr__(self, "lambda_", tuple(self.lambda_))
        self.validate()

    @property
    def binary(self) -> bool:
        return self.endpoint == "binary"

    def validate(self) -> None:
        chk = Checker()
        chk.require(self.endpoint in ENDPOINTS, "endpoint", f"must be one of {ENDPOINTS}, got {self.endpoint!r}")
        chk.positive_int(self.num_arms, "num_arms")
        chk.positive_int(self.n_arm, "n_arm")
        chk.positive_int(self.period_blocks, "period_blocks")
        chk.require(self.trend in TREND_KINDS, "trend", f"must be one of {TREND_KINDS}, got {self.trend!r}")

        k = self.num_arms if isinstance(self.num_arms, int) and self.num_arms > 0 else None
        if chk.real_sequence(self.entry_times, "d", length=k):
            if any(t != int(t) for t in self.entry_times):
                chk.fail("d", "entry times must be integers")
            elif list(self.entry_times) != sorted(self.entry_times):
                chk.fail("d", "entry times must be nondecreasing")
            elif self.entry_times and self.entry_times[0] != 0:
                chk.fail("d", f"first arm must enter at 0, got {self.entry_times[0]}")
            elif any(t < 0 for t in self.entry_times):
                chk.fail("d", "entry times must be nonnegative")

        effects_name = "OR" if self.endpoint == "binary" else "theta"
        if chk.real_sequence(self.effects, effects_name, length=k):
            if self.endpoint == "binary" and any(v <= 0 for v in self.effects):
                chk.fail(effects_name, "odds ratios must be positive")

        chk.real_sequence(self.lambda_, "lambda", length=None if k is None else k + 1)

        if self.endpoint == "binary":
            ok = isinstance(self.control_response, (int, float)) and 0 < self.control_response < 1
            chk.require(ok, "p0", f"must lie in (0, 1), got {self.control_response!r}")
        else:
            chk.require(
                isinstance(self.control_response, (int, float)) and not isinstance(self.control_response, bool),
                "mu0",
                f"must be a number, got {self.control_response!r}",
            )
            chk.positive_real(self.sigma, "sigma")

        if self.trend == "inv_u":
            chk.positive_int(self.n_peak, "N_peak")
        if self.trend == "seasonal":
            chk.positive_int(self.n_wave, "n_wave")
        chk.raise_if_failed()

    @classmethod
    def from_dict(cls, spec: Mapping, endpoint: str | None = None) -> "TrialConfig":
        """Build a config from a flat mapping using the documented argument names."""
        endpoint = endpoint or spec.get("endpoint")
        if endpoint not in ENDPOINTS:
            raise ValidationError({"endpoint": f"must be one of {ENDPOINTS}, got {endpoint!r}"})
        binary = endpoint == "binary"

        def get(*names, default=None):
            for name in names:
                if name in spec and spec[name] is not None:
                    return spec[name]
            return default

        missing = {}
        num_arms = get("num_arms")
        n_arm = get("n_arm")
        entry = get("d", "entry_times")
        control = get("p0" if binary else "mu0", "control_response")
        effects = get("OR" if binary else "theta", "effects")
        lam = get("lambda", "lambda_")
        for name, value in [
            ("num_arms", num_arms),
            ("n_arm", n_arm),
            ("d", entry),
            ("p0" if binary else "mu0", control),
            ("OR" if binary else "theta", effects),
            ("lambda", lam),
        ]:
            if value is None:
                missing[name] = "required argument is missing"
        if not binary and get("sigma") is None:
            missing["sigma"] = "required argument is missing"
        if missing:
            raise ValidationError(missing)

        return cls(
            endpoint=endpoint,
            num_arms=num_arms,
            n_arm=n_arm,
            entry_times=tuple(entry),
            control_response=control,
            effects=tuple(effects),
            lambda_=tuple(lam),
            trend=get("trend", default="linear"),
            sigma=get("sigma"),
            period_blocks=get("period_blocks", default=2),
            n_peak=get("N_peak", "n_peak"),
            n_wave=get("n_wave"),
        )

    def true_effect(self, arm: int) -> float:
        """True effect on the analysis scale: log odds ratio, or mean difference."""
        value = self.effects[arm - 1]
        return math.log(value) if self.binary else float(value)


@dataclass(frozen=True)
class ParticipantRecord:
    j: int
    response: float
    treatment: int
    period: int


@dataclass(frozen=True)
class Period:
    index: int
    start: int
    end: int
    active_arms: frozenset[int]

    @property
    def size(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class PeriodMap:
    """Partition of recruitment indices 1..N into periods of constant arm activity."""

    periods: tuple[Period, ...]

    def __post_init__(self):
        if not self.periods:
            raise ValueError("no participants")
        prev_end = 0
        for s, p in enumerate(self.periods, start=1):
            if p.index != s:
                raise ValueError(f"period indices must run 1..S, got {p.index} at position {s}")
            if p.start != prev_end + 1 or p.end < p.start:
                raise ValueError("periods must be contiguous and nonempty")
            if 0 not in p.active_arms:
                raise ValueError("control must be active in every period")
            prev_end = p.end

    def __len__(self) -> int:
        return len(self.periods)

    def __iter__(self) -> Iterator[Period]:
        return iter(self.periods)

    @property
    def n_participants(self) -> int:
        return self.periods[-1].end

    def period_of(self, j: int | np.ndarray) -> int | np.ndarray:
        starts = np.array([p.start for p in self.periods])
        idx = np.searchsorted(starts, np.asarray(j), side="right")
        out = np.asarray(idx, dtype=np.int64)
        return int(out) if np.isscalar(j) or out.ndim == 0 else out

    def labels(self) -> np.ndarray:
        """Period index per participant, shape (N,)."""
        return np.repeat([p.index for p in self.periods], [p.size for p in self.periods])


def derive_periods(n: int, entries: Mapping[int, int], exits: Mapping[int, int]) -> PeriodMap:
    """Derive the PeriodMap for a trial of ``n`` participants from arm events.

    ``entries[k]``/``exits[k]`` give the first and last recruitment index at
    which experimental arm ``k`` is active.  The control arm is active
    throughout.  A new period starts exactly where the active set changes;
    arms entering together create a single boundary.
    """
    if n <= 0:
        raise ValueError("no participants")
    for k, first in entries.items():
        last = exits.get(k)
        if last is not None and last < first:
            raise ValueError(f"arm {k}: exit {last} precedes entry {first}")

    cuts = {1}
    for k, first in entries.items():
        if 1 <= first <= n:
            cuts.add(first)
    for k, last in exits.items():
        if 1 <= last < n:
            cuts.add(last + 1)
    starts = sorted(cuts)

    periods: list[Period] = []
    for i, start in enumerate(starts):
        end = starts[i + 1] - 1 if i + 1 < len(starts) else n
        active = {0}
        for k, first in entries.items():
            last = exits.get(k, n)
            if first <= start and last >= end:
                active.add(k)
        if periods and periods[-1].active_arms == frozenset(active):
            prev = periods.pop()
            periods.append(Period(prev.index, prev.start, end, prev.active_arms))
        else:
            periods.append(Period(len(periods) + 1, start, end, frozenset(active)))
    return PeriodMap(tuple(periods))


@dataclass(frozen=True)
class TrialData:
    """Participant-level trial data, stored column-wise.

    ``j`` is the recruitment index (1..N contiguous), ``treatment`` the arm id
    (0 = control) and ``period`` the 1-based period of recruitment.  Rows are
    ordered by ``j``.
    """

    j: np.ndarray
    response: np.ndarray
    treatment: np.ndarray
    period: np.ndarray
    endpoint: str
    period_map: PeriodMap = field(repr=False, default=None)
    arm_windows: Mapping[int, tuple[int, int]] = field(repr=False, default=None)

    def __post_init__(self):
        j = np.asarray(self.j, dtype=np.int64)
        treatment = np.asarray(self.treatment, dtype=np.int64)
        period = np.asarray(self.period, dtype=np.int64)
        response = np.asarray(self.response, dtype=np.float64)
        for name, arr in [("j", j), ("response", response), ("treatment", treatment), ("period", period)]:
            object.__setattr__(self, name, arr)
        self._validate()
        if self.arm_windows is None:
            object.__setattr__(self, "arm_windows", self._observed_windows())
        if self.period_map is None:
            object.__setattr__(self, "period_map", self._period_map_from_columns())

    def _validate(self) -> None:
        n = len(self.j)
        chk = Checker()
        chk.require(n > 0, "data", "no participants")
        chk.raise_if_failed()
        if not np.array_equal(self.j, np.arange(1, n + 1)):
            chk.fail("j", "recruitment indices must be contiguous 1..N in order")
        if self.endpoint not in ENDPOINTS:
            chk.fail("endpoint", f"must be one of {ENDPOINTS}, got {self.endpoint!r}")
        if self.endpoint == "binary" and not np.isin(self.response, (0.0, 1.0)).all():
            chk.fail("response", "binary responses must be 0 or 1")
        if (self.treatment < 0).any():
            chk.fail("treatment", "arm ids must be nonnegative")
        diffs = np.diff(self.period)
        if n and (self.period[0] != 1 or ((diffs != 0) & (diffs != 1)).any()):
            chk.fail("period", "periods must start at 1 and increase contiguously")
        chk.raise_if_failed()

    def _observed_windows(self) -> dict[int, tuple[int, int]]:
        windows = {}
        for arm in np.unique(self.treatment):
            mask = self.treatment == arm
            windows[int(arm)] = (int(self.j[mask].min()), int(self.j[mask].max()))
        if 0 in windows:
            windows[0] = (1, int(self.j[-1]))
        return windows

    def _period_map_from_columns(self) -> PeriodMap:
        periods = []
        for s in range(1, int(self.period[-1]) + 1):
            mask = self.period == s
            start, end = int(self.j[mask].min()), int(self.j[mask].max())
            active = {0}
            for arm, (lo, hi) in self.arm_windows.items():
                if arm > 0 and lo <= end and hi >= start:
                    active.add(arm)
            periods.append(Period(s, start, end, frozenset(active)))
        return PeriodMap(tuple(periods))

    def __len__(self) -> int:
        return len(self.j)

    @property
    def n_participants(self) -> int:
        return len(self.j)

    @property
    def binary(self) -> bool:
        return self.endpoint == "binary"

    def arms(self) -> list[int]:
        """Experimental arm ids present, ascending."""
        return sorted(int(a) for a in np.unique(self.treatment) if a > 0)

    def records(self) -> Iterator[ParticipantRecord]:
        for j, r, t, p in zip(self.j, self.response, self.treatment, self.period):
            yield ParticipantRecord(int(j), float(r), int(t), int(p))

    # -- analysis bookkeeping -------------------------------------------------

    def exit_index(self, arm: int) -> int:
        """Last recruitment index at which ``arm`` was active."""
        if arm not in self.arm_windows:
            raise ValidationError({"arm": f"arm {arm} not present in the data"})
        return self.arm_windows[arm][1]

    def concurrent_periods(self, arm: int) -> list[int]:
        """Periods during which ``arm`` was active (contiguous by construction)."""
        lo, hi = self.arm_windows[arm] if arm in self.arm_windows else (None, None)
        if lo is None:
            raise ValidationError({"arm": f"arm {arm} not present in the data"})
        first = self.period_map.period_of(lo)
        last = self.period_map.period_of(hi)
        return list(range(int(first), int(last) + 1))

    # -- serialization --------------------------------------------------------

    def to_csv(self, path) -> None:
        if hasattr(path, "write"):
            self._write_csv(path)
        else:
            with open(path, "w", newline="") as fh:
                self._write_csv(fh)

    def _write_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        binary = self.endpoint == "binary"
        for j, r, t, p in zip(self.j, self.response, self.treatment, self.period):
            value = int(r) if binary else repr(float(r))
            writer.writerow([int(j), value, int(t), int(p)])

    @classmethod
    def from_csv(cls, path, endpoint: str = "auto") -> "TrialData":
        if hasattr(path, "read"):
            return cls._read_csv(path, endpoint)
        with open(path, newline="") as fh:
            return cls._read_csv(fh, endpoint)

    @classmethod
    def _read_csv(cls, fh, endpoint: str) -> "TrialData":
        rows = []
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise ValidationError({"data": f"expected header {','.join(CSV_HEADER)}, got {header}"})
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ValidationError({"data": f"line {lineno}: expected 4 columns, got {len(row)}"})
            try:
                rows.append((int(row[0]), float(row[1]), int(row[2]), int(row[3])))
            except ValueError:
                raise ValidationError({"data": f"line {lineno}: could not parse row {row!r}"}) from None
        if not rows:
            raise ValidationError({"data": "no participants"})
        j, response, treatment, period = (np.array(col) for col in zip(*rows))
        return cls.from_columns(j, response, treatment, period, endpoint=endpoint)

    @classmethod
    def from_columns(cls, j, response, treatment, period, endpoint: str = "auto") -> "TrialData":
        response = np.asarray(response, dtype=np.float64)
        if endpoint == "auto":
            endpoint = "binary" if np.isin(response, (0.0, 1.0)).all() else "continuous"
        return cls(j=np.asarray(j), response=response, treatment=np.asarray(treatment),
                   period=np.asarray(period), endpoint=endpoint)

    @classmethod
    def from_frame(cls, frame, endpoint: str = "auto") -> "TrialData":
        """Accept any mapping of column name -> sequence (e.g. a pandas DataFrame)."""
        try:
            cols = [frame[name] for name in CSV_HEADER]
        except (KeyError, IndexError, TypeError):
            raise ValidationError({"data": f"expected columns {CSV_HEADER}"}) from None
        return cls.from_columns(*cols, endpoint=endpoint)


def as_trial_data(data, endpoint: str = "auto") -> TrialData:
    """Coerce analysis input (TrialData or column mapping) to TrialData."""
    if isinstance(data, TrialData):
        if endpoint not in ("auto", data.endpoint):
            raise ValidationError({"endpoint": f"data endpoint is {data.endpoint!r}, requested {endpoint!r}"})
        return data
    return TrialData.from_frame(data, endpoint=endpoint)


@dataclass(frozen=True)
class AnalysisResult:
    """Decision record of one treatment-versus-control analysis.

    ``p_val`` is the one-sided p-value (frequentist) or the posterior
    probability that the effect is <= 0 (Bayesian); ``treat_effect`` is on the
    log-odds-ratio scale for binary endpoints and the mean-difference scale
    for continuous ones; the interval is the (1 - 2*alpha) confidence or
    credible interval and ``reject_h0`` is ``p_val < alpha``.
    """

    p_val: float
    treat_effect: float
    lower_ci: float
    upper_ci: float
    reject_h0: bool
    method: str
    arm: int
    alpha: float
    diagnostics: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not (self.lower_ci <= self.upper_ci):
            raise ValueError("interval bounds out of order")
        if self.reject_h0 != (self.p_val < self.alpha):
            raise ValueError("reject_h0 must equal (p_val < alpha)")

    def to_output_dict(self) -> dict:
        out = {
            "p_val": float(self.p_val),
            "treat_effect": float(self.treat_effect),
            "lower_ci": float(self.lower_ci),
            "upper_ci": float(self.upper_ci),
            "reject_h0": bool(self.reject_h0),
        }
        if "model" in self.diagnostics:
            out["model"] = self.diagnostics["model"]
        return out
