"""Platform-trial simulation and analysis with non-concurrent controls."""

from .base import TrialAnalysis
from .frequentist import FixedEffectModel, PooledModel, SeparateModel
from .glm import (DegenerateError, EstimationError, SeparationError,
                  SingularDesignError)
from .mapprior import (MapPriorModel, MapSettings, MixturePrior,
                       NoNonConcurrentControlsError, derive_map_prior, robustify)
from .mcmc import (ChainSettings, DivergentChainError, GibbsBlock,
                   MetropolisBlock, PosteriorSamples, run_chain)
from .methods import METHOD_REGISTRY, analyze, make_method
from .plot import plot_trial, trial_svg
from .simstudy import (Scenario, StudyResult, StudyRow, load_grid,
                       run_replication, run_simulation_study, sim_study_par)
from .simulate import SimulatedTrial, block_randomize, simulate_trial
from .timemachine import TimeMachineModel, TimeMachineSettings, bucketize
from .trends import (evaluate_trend, inverted_u_trend, linear_trend,
                     seasonal_trend, stepwise_trend)
from .trial import (AnalysisResult, Period, PeriodMap, TrialConfig, TrialData,
                    derive_periods)
from .validation import ValidationError

__version__ = "0.1.0"

__all__ = [
    "AnalysisResult", "ChainSettings", "DegenerateError", "DivergentChainError",
    "EstimationError", "FixedEffectModel", "GibbsBlock", "MapPriorModel",
    "MapSettings", "METHOD_REGISTRY", "MetropolisBlock", "MixturePrior",
    "NoNonConcurrentControlsError", "Period", "PeriodMap", "PooledModel",
    "PosteriorSamples", "Scenario", "SeparateModel", "SeparationError",
    "SimulatedTrial", "SingularDesignError", "StudyResult", "StudyRow",
    "TimeMachineModel", "TimeMachineSettings", "TrialAnalysis", "TrialConfig",
    "TrialData", "ValidationError", "analyze", "block_randomize", "bucketize",
    "derive_map_prior", "derive_periods", "evaluate_trend", "inverted_u_trend",
    "linear_trend", "load_grid", "make_method", "plot_trial", "robustify",
    "run_chain", "run_replication", "run_simulation_study", "seasonal_trend",
    "sim_study_par", "simulate_trial", "stepwise_trend", "trial_svg",
]
