"""Surrogate-assisted optimization of stochastic quantum-network configurations.

Subpackages cover the search space and encodings (space), the two in-repo
regressors and model selection (forest, svr, models), the acquisition
schedule (acquisition), the cycle engine (optimizer), baselines (baselines),
two quantum-network simulators (qes, cd), the budgeted memory-allocation
objective (memalloc), dominating-set analysis (pareto), and the CLI (cli).
"""

__version__ = "0.1.0"

from ._accel import USING_NUMBA, accel_mode
from .acquisition import AcquisitionSettings, propose, sample_count, sample_neighbor, transition
from .baselines import Budget, SaSettings, random_search, simulated_annealing
from .errors import (
    ConfigFileError,
    ConvergenceError,
    DegenerateSampleError,
    DomainError,
    EmptyReportError,
    EvaluationError,
    ExternalObjectiveError,
    InsufficientDataError,
    QnetoptError,
)
from .models import (
    Dataset,
    TrainedModel,
    cross_validate,
    load_model,
    save_model,
    select_model,
    train_rf,
    train_svr,
)
from .optimizer import (
    EvalRecord,
    Limit,
    Objective,
    OptimizationResult,
    RunSettings,
    TimingProfile,
    evaluate,
    run,
)
from .pareto import ParetoReport, dominating_set, ks_distance, summarize
from .space import ConfigPoint, ParamSpec, SearchSpace, encode, sample_uniform, validate

__all__ = [
    "AcquisitionSettings",
    "Budget",
    "ConfigFileError",
    "ConfigPoint",
    "ConvergenceError",
    "Dataset",
    "DegenerateSampleError",
    "DomainError",
    "EmptyReportError",
    "EvalRecord",
    "EvaluationError",
    "ExternalObjectiveError",
    "InsufficientDataError",
    "Limit",
    "Objective",
    "OptimizationResult",
    "ParamSpec",
    "ParetoReport",
    "QnetoptError",
    "RunSettings",
    "SaSettings",
    "SearchSpace",
    "TimingProfile",
    "TrainedModel",
    "USING_NUMBA",
    "accel_mode",
    "cross_validate",
    "dominating_set",
    "encode",
    "evaluate",
    "ks_distance",
    "load_model",
    "propose",
    "random_search",
    "run",
    "sample_count",
    "sample_neighbor",
    "sample_uniform",
    "save_model",
    "select_model",
    "simulated_annealing",
    "summarize",
    "train_rf",
    "train_svr",
    "transition",
    "validate",
]
