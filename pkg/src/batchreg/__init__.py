"""List-decodable linear regression from batches.

Given m batches of n samples where only an alpha fraction of batches is
genuine, produce a short list of regression vectors such that at least one
is close to the true parameter.  Built around Huber-clipped batch
gradients, an adaptive clipping level, and iterative soft-cluster
filtering.
"""

from .algorithm import RunResult, list_size_bound, run, select_by_holdout, theta1, theta2
from .backend import backend_name
from .clipping import ClipResult, compute_a_constants, find_clipping_parameter
from .evaluate import (
    ExperimentResult,
    Metrics,
    evaluate_run,
    identification_radius,
    min_list_error,
    run_experiment,
    run_trial,
)
from .multifilter import SplitParams, downweight, find_split, multifilter, trim_bounds
from .solver import SolverReport, solve_stationary, weighted_ols
from .synth import (
    Adversary,
    CovariateModel,
    GeneratorSpec,
    LabeledCollection,
    NoiseModel,
    generate,
    generate_holdout,
)
from .types import (
    AlgoConfig,
    Batch,
    BatchCollection,
    FilterOutcome,
    Sample,
    Triplet,
    WeightVector,
    total_weight,
)
from .wstats import (
    EigPair,
    cov_top_eig,
    weighted_mean,
    weighted_upper_quantile,
    weighted_variance,
)

__version__ = "0.1.0"

__all__ = [
    "AlgoConfig",
    "Adversary",
    "Batch",
    "BatchCollection",
    "ClipResult",
    "CovariateModel",
    "EigPair",
    "ExperimentResult",
    "FilterOutcome",
    "GeneratorSpec",
    "LabeledCollection",
    "Metrics",
    "NoiseModel",
    "RunResult",
    "Sample",
    "SolverReport",
    "SplitParams",
    "Triplet",
    "WeightVector",
    "backend_name",
    "compute_a_constants",
    "cov_top_eig",
    "downweight",
    "evaluate_run",
    "find_clipping_parameter",
    "find_split",
    "generate",
    "generate_holdout",
    "identification_radius",
    "list_size_bound",
    "min_list_error",
    "multifilter",
    "run",
    "run_experiment",
    "run_trial",
    "select_by_holdout",
    "solve_stationary",
    "theta1",
    "theta2",
    "total_weight",
    "trim_bounds",
    "weighted_mean",
    "weighted_ols",
    "weighted_upper_quantile",
    "weighted_variance",
]
