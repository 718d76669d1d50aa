"""Name-based dispatch over the analysis methods."""

from __future__ import annotations

import inspect

from .base import TrialAnalysis
from .frequentist import FixedEffectModel, PooledModel, SeparateModel
from .mapprior import MapPriorModel
from .timemachine import TimeMachineModel
from .trial import AnalysisResult
from .validation import ValidationError

METHOD_REGISTRY: dict[str, type[TrialAnalysis]] = {
    "fixmodel": FixedEffectModel,
    "sepmodel": SeparateModel,
    "poolmodel": PooledModel,
    "mapprior": MapPriorModel,
    "timemachine": TimeMachineModel,
}

BAYESIAN_METHODS = ("mapprior", "timemachine")


def make_method(name: str, **params) -> TrialAnalysis:
    """Instantiate a registered analysis method, rejecting unknown settings."""
    if name not in METHOD_REGISTRY:
        raise ValidationError({"method": f"unknown method {name!r}; choose from {sorted(METHOD_REGISTRY)}"})
    cls = METHOD_REGISTRY[name]
    sig = inspect.signature(cls.__init__)
    unknown = {k: f"not a setting of method {name!r}" for k in params if k not in sig.parameters}
    if unknown:
        raise ValidationError(unknown)
    return cls(**params)


def analyze(data, arm: int = 1, method: str = "fixmodel", **params) -> AnalysisResult:
    """One-call analysis: build the method, fit, return its AnalysisResult."""
    return make_method(method, **params).fit(data, arm).result_
