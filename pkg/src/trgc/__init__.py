"""Time-reversed Granger causality for bivariate VAR processes."""

from .errors import TrgcError
from .granger import (
    Decision,
    GrangerScores,
    TrgcResult,
    decide,
    granger_scores,
    innovation_variance,
    trgc_analytic,
    trgc_from_series,
)
from .inference import (
    BootstrapSpec,
    ConfidenceInterval,
    bootstrap_ci,
    f_test_gc,
    select_order_bic,
)
from .scenarios import ExperimentResult, InferenceConfig, ScenarioConfig, run_experiment, run_grid
from .structural import MixtureModel, SvarModel, mixture_to_var, svar_to_var
from .time_reversal import reverse_var1, reverse_varp
from .var_core import (
    CrossCovSequence,
    TimeSeries,
    VarModel,
    check_stability,
    fit_var_ols,
    simulate,
    solve_cross_covariances,
)

__version__ = "0.1.0"

__all__ = [
    "BootstrapSpec",
    "ConfidenceInterval",
    "CrossCovSequence",
    "Decision",
    "ExperimentResult",
    "GrangerScores",
    "InferenceConfig",
    "MixtureModel",
    "ScenarioConfig",
    "SvarModel",
    "TimeSeries",
    "TrgcError",
    "TrgcResult",
    "VarModel",
    "bootstrap_ci",
    "check_stability",
    "decide",
    "f_test_gc",
    "fit_var_ols",
    "granger_scores",
    "innovation_variance",
    "mixture_to_var",
    "reverse_var1",
    "reverse_varp",
    "run_experiment",
    "run_grid",
    "select_order_bic",
    "simulate",
    "solve_cross_covariances",
    "svar_to_var",
    "trgc_analytic",
    "trgc_from_series",
]
