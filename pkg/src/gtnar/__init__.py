"""Grouped tensor network autoregression."""

__version__ = "0.1.0"

from .api import GTNAR, GTNARSelector
from .estimator import (
    Design,
    FitResult,
    NormalSystem,
    assemble_normal_system,
    build_design_block,
    fit,
    fit_oracle,
    init_memberships,
    make_design,
    node_losses,
    objective_q,
    solve_params,
    update_memberships_mode,
)
from .exceptions import EmptyGroupError, GTNARError, SingularSystemError, UnstableParametersError
from .inference import (
    InferenceResult,
    MetricReport,
    chi_error_rate,
    coefficient_inference,
    misclustering_rate,
    pseudo_distance,
    residual_variance,
    simulation_metrics,
)
from .model import (
    CovariatePanel,
    GroupedParameters,
    TensorSeries,
    example_parameters,
    gen_covariates,
    simulate,
    stability_check,
)
from .networks import GroupAssignment, NetworkLayer, gen_powerlaw, gen_sbm, row_normalize, sample_memberships
from .selection import SelectionResult, default_kappa, qic, select
from .tensor import DenseTensor, IndexSubset, mode_multiply, unvectorize, vectorize

__all__ = [
    "GTNAR",
    "GTNARSelector",
    "CovariatePanel",
    "DenseTensor",
    "Design",
    "EmptyGroupError",
    "FitResult",
    "GTNARError",
    "GroupAssignment",
    "GroupedParameters",
    "IndexSubset",
    "InferenceResult",
    "MetricReport",
    "NetworkLayer",
    "NormalSystem",
    "SelectionResult",
    "SingularSystemError",
    "TensorSeries",
    "UnstableParametersError",
    "assemble_normal_system",
    "build_design_block",
    "chi_error_rate",
    "coefficient_inference",
    "default_kappa",
    "example_parameters",
    "fit",
    "fit_oracle",
    "gen_covariates",
    "gen_powerlaw",
    "gen_sbm",
    "init_memberships",
    "make_design",
    "misclustering_rate",
    "mode_multiply",
    "node_losses",
    "objective_q",
    "pseudo_distance",
    "qic",
    "residual_variance",
    "row_normalize",
    "sample_memberships",
    "select",
    "simulate",
    "simulation_metrics",
    "solve_params",
    "stability_check",
    "unvectorize",
    "update_memberships_mode",
    "vectorize",
]
