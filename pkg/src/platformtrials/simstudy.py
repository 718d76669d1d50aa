"""Scenario-grid simulation studies: replicate, analyze, aggregate.

Parallelism is at replication level, but results never depend on it: every
replication derives its own seed from (master seed, scenario id, replication
index), and rows are sorted canonically before aggregation, so any worker
count produces byte-identical output.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .methods import BAYESIAN_METHODS, METHOD_REGISTRY, analyze
from .simulate import simulate_trial
from .trial import TrialConfig
from .validation import Checker, ValidationError

FAILURE_WARN_FRACTION = 0.02
REDUCED_BURN_IN = 2000
REDUCED_DRAWS = 4000
WORKERS_ENV_VAR = "PLATFORMTRIALS_WORKERS"


@dataclass(frozen=True)
class Scenario:
    """One grid point: a trial configuration plus what to analyze on it."""

    id: str
    config: TrialConfig
    arms: tuple[int, ...] = ()
    methods: tuple[str, ...] = ("fixmodel",)
    method_settings: dict = field(default_factory=dict)
    alpha: float = 0.025

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms) or tuple(range(1, self.config.num_arms + 1)))
        object.__setattr__(self, "methods", tuple(self.methods))
        ck = Checker()
        ck.require(bool(self.methods), "methods", "must be nonempty")
        for m in self.methods:
            ck.require(m in METHOD_REGISTRY, "methods",
                       f"unknown method {m!r}; choose from {sorted(METHOD_REGISTRY)}")
        for a in self.arms:
            ck.require(isinstance(a, int) and 1 <= a <= self.config.num_arms, "arms",
                       f"arm {a!r} outside 1..{self.config.num_arms}")
        ck.require(isinstance(self.alpha, (int, float)) and 0.0 < self.alpha < 0.5,
                   "alpha", "must be in (0, 0.5)")
        for m in self.method_settings:
            ck.require(m in METHOD_REGISTRY, "method_settings", f"unknown method {m!r}")
        ck.raise_if_failed()


def _scenario_entropy(scenario_id: str) -> int:
    digest = hashlib.sha256(scenario_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def run_replication(scenario: Scenario, replication_index: int, master_seed: int) -> list[dict]:
    """Simulate one trial and run every requested (arm, method) analysis.

    Analysis failures are captured in the cell (reject/estimate None), never
    propagated; the simulation itself is expected to succeed for any valid
    config.
    """
    ss = np.random.SeedSequence([int(master_seed), _scenario_entropy(scenario.id),
                                 int(replication_index)])
    children = ss.spawn(1 + len(scenario.arms) * len(scenario.methods))
    data = simulate_trial(scenario.config, np.random.default_rng(children[0]))

    cells = []
    child = 1
    for arm in scenario.arms:
        for method in scenario.methods:
            params = dict(scenario.method_settings.get(method, {}))
            params.setdefault("alpha", scenario.alpha)
            if method in BAYESIAN_METHODS:
                params.setdefault("burn_in", REDUCED_BURN_IN)
                params.setdefault("draws", REDUCED_DRAWS)
                params["seed"] = children[child]
            try:
                res = analyze(data, arm, method, **params)
                cells.append({"arm": arm, "method": method, "reject": bool(res.reject_h0),
                              "estimate": float(res.treat_effect), "error": None})
            except (RuntimeError, ValueError) as exc:
                cells.append({"arm": arm, "method": method, "reject": None,
                              "estimate": None, "error": str(exc) or type(exc).__name__})
            child += 1
    return cells


@dataclass(frozen=True)
class StudyRow:
    scenario: str
    arm: int
    method: str
    reject_prob: float
    bias: float
    mse: float
    mc_se: float
    n_failed: int
    nsim: int


@dataclass(frozen=True)
class StudyResult:
    """Aggregated operating characteristics, one row per (scenario, arm, method)."""

    rows: tuple[StudyRow, ...]

    CSV_COLUMNS = ("scenario", "arm", "method", "reject_prob", "bias", "mse",
                   "mc_se", "n_failed", "nsim")

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)

    def to_csv(self, path) -> None:
        def fmt(v):
            return repr(float(v)) if isinstance(v, float) else str(v)

        lines = [",".join(self.CSV_COLUMNS)]
        for r in self.rows:
            lines.append(",".join(fmt(getattr(r, c)) for c in self.CSV_COLUMNS))
        text = "\n".join(lines) + "\n"
        if hasattr(path, "write"):
            path.write(text)
        else:
            with open(path, "w") as fh:
                fh.write(text)


def cell_metrics(rejects, estimates, truth: float):
    """Operating characteristics of one (scenario, arm, method) cell.

    ``rejects``/``estimates`` come from the successful replications only.
    Returns (reject_prob, bias, mse, mc_se); nans when nothing succeeded.
    """
    n_ok = len(rejects)
    if n_ok == 0:
        nan = float("nan")
        return nan, nan, nan, nan
    p = sum(bool(r) for r in rejects) / n_ok
    errors = [e - truth for e in estimates]
    bias = sum(errors) / n_ok
    mse = sum(e * e for e in errors) / n_ok
    mc_se = math.sqrt(p * (1.0 - p) / n_ok)
    return p, bias, mse, mc_se


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError({WORKERS_ENV_VAR: f"must be an integer, got {env!r}"}) from None
    return max(1, int(0.9 * (os.cpu_count() or 1)))


def _replicate_task(args):
    si, scenario, rep, master_seed = args
    return si, rep, run_replication(scenario, rep, master_seed)


def sim_study_par(scenarios, nsim: int, master_seed: int = 1,
                  workers: int | None = None) -> StudyResult:
    """Run the grid: nsim replications per scenario, aggregated per cell.

    reject_prob counts rejections among replications whose analysis succeeded;
    bias and mse compare estimates with the scenario's true effect on the
    analysis scale (log odds ratio / mean difference).
    """
    scenarios = list(scenarios)
    ck = Checker()
    ck.require(bool(scenarios), "scenarios", "must be nonempty")
    ck.require(isinstance(nsim, int) and nsim >= 1, "nsim", "must be an integer >= 1")
    ck.require(isinstance(master_seed, int) and master_seed >= 0,
               "master_seed", "must be a nonnegative integer")
    ck.raise_if_failed()
    ids = [s.id for s in scenarios]
    if len(set(ids)) != len(ids):
        raise ValidationError({"scenarios": "scenario ids must be unique"})
    if workers is None:
        workers = default_workers()

    tasks = [(si, scenarios[si], rep, master_seed)
             for si in range(len(scenarios)) for rep in range(nsim)]
    if workers <= 1:
        outputs = [_replicate_task(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_replicate_task, tasks, chunksize=chunk))
    outputs.sort(key=lambda o: (o[0], o[1]))

    by_cell: dict[tuple[int, int, str], list[dict]] = {}
    for si, _rep, cells in outputs:
        for cell in cells:
            by_cell.setdefault((si, cell["arm"], cell["method"]), []).append(cell)

    rows = []
    for si, scenario in enumerate(scenarios):
        for arm in scenario.arms:
            truth = scenario.config.true_effect(arm)
            for method in scenario.methods:
                cells = by_cell.get((si, arm, method), [])
                ok = [c for c in cells if c["error"] is None]
                n_failed = len(cells) - len(ok)
                if n_failed > FAILURE_WARN_FRACTION * nsim:
                    warnings.warn(f"scenario {scenario.id!r} arm {arm} method {method}: "
                                  f"{n_failed}/{nsim} replications failed")
                p, bias, mse, mc_se = cell_metrics([c["reject"] for c in ok],
                                                   [c["estimate"] for c in ok], truth)
                rows.append(StudyRow(scenario=scenario.id, arm=arm, method=method,
                                     reject_prob=p, bias=bias, mse=mse, mc_se=mc_se,
                                     n_failed=n_failed, nsim=nsim))
    return StudyResult(tuple(rows))


run_simulation_study = sim_study_par


# -- grid files ----------------------------------------------------------------

_LIST_FIELDS = ("d", "entry_times", "OR", "theta", "lambda", "arms", "methods")


def scenario_from_spec(spec, index: int = 0) -> Scenario:
    spec = dict(spec)
    config = TrialConfig.from_dict(spec)
    return Scenario(
        id=str(spec.get("id", f"s{index}")),
        config=config,
        arms=tuple(int(a) for a in spec.get("arms", ()) or ()),
        methods=tuple(spec.get("methods", ()) or ("fixmodel",)),
        method_settings=dict(spec.get("method_settings", {})),
        alpha=spec.get("alpha", 0.025),
    )


def _parse_scalar(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def load_grid(path) -> list[Scenario]:
    """Read a scenario grid from a .json or .csv file.

    JSON: a list of scenario objects (or {"scenarios": [...]}) using the
    documented argument names.  CSV: one row per scenario; list-valued fields
    (d, OR, theta, lambda, arms, methods) use ';' between entries.
    """
    text = open(path).read()
    if str(path).endswith(".json"):
        doc = json.loads(text)
        specs = doc["scenarios"] if isinstance(doc, dict) else doc
        return [scenario_from_spec(s, i) for i, s in enumerate(specs)]

    reader = csv.DictReader(text.splitlines())
    specs = []
    for row in reader:
        spec = {}
        for key, raw in row.items():
            if raw is None or raw == "" or key is None:
                continue
            raw = raw.strip()
            if key in _LIST_FIELDS:
                spec[key] = [_parse_scalar(v.strip()) for v in raw.split(";") if v.strip()]
            else:
                spec[key] = _parse_scalar(raw)
        specs.append(spec)
    if not specs:
        raise ValidationError({"grid": "no scenarios in file"})
    return [scenario_from_spec(s, i) for i, s in enumerate(specs)]
