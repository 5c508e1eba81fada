"""K-sample equality-of-distribution testing for functional data.

Pairwise characteristic-functional Cramér-von Mises statistics (or
covariance square-root distances) are combined across all group pairs by a
permutation test whose multivariate replicas are mapped, via discrete
optimal transport, onto a reference grid in the positive-orthant unit
ball. The transported image of the original statistic yields a single
p-value plus per-pair contribution diagnostics.
"""

__version__ = "0.1.0"

from .curves import (
    FunctionalSample,
    PooledDataset,
    TimeGrid,
    inner_product,
    load_curves,
    log_cir,
    quadrature_weights,
    save_curves,
)
from .permutation import PermutationPlan, ReplicaSet, permute_dataset, replicate
from .report import DecisionSummary, RunConfig, TestReport, interpret, run
from .stats import (
    PairSelection,
    StatConfig,
    StatVector,
    WeightMatrix,
    cf_cvm_pair,
    cov_sqrt_pair,
    ecf_cvm_oracle,
    ecf_eval,
    pairwise_vector,
    sample_covariance,
    truncated_inverse,
    weight_matrix_from_data,
)
from .synthetic import ScenarioSpec, generate
from .transport import (
    GridSet,
    GridSpec,
    OmtResult,
    build_grid,
    classical_p_value,
    evaluate,
    halton,
    solve_assignment,
    tau_map,
)

__all__ = [
    "FunctionalSample",
    "PooledDataset",
    "TimeGrid",
    "inner_product",
    "load_curves",
    "log_cir",
    "quadrature_weights",
    "save_curves",
    "PermutationPlan",
    "ReplicaSet",
    "permute_dataset",
    "replicate",
    "DecisionSummary",
    "RunConfig",
    "TestReport",
    "interpret",
    "run",
    "PairSelection",
    "StatConfig",
    "StatVector",
    "WeightMatrix",
    "cf_cvm_pair",
    "cov_sqrt_pair",
    "ecf_cvm_oracle",
    "ecf_eval",
    "pairwise_vector",
    "sample_covariance",
    "truncated_inverse",
    "weight_matrix_from_data",
    "ScenarioSpec",
    "generate",
    "GridSet",
    "GridSpec",
    "OmtResult",
    "build_grid",
    "classical_p_value",
    "evaluate",
    "halton",
    "solve_assignment",
    "tau_map",
]
