"""Adaptive projection estimators for non-parametric Poisson regression."""

from .basis import (
    BasisFamily,
    Model,
    ModelCollection,
    check_assumption1,
    default_collection,
    eval_basis,
)
from .bench import (
    BenchmarkConfig,
    BenchmarkReport,
    GammaKind,
    QuantileBand,
    SobolevSpec,
    minimax_rate,
    paper_config,
    quantile_bands,
    rate_study,
    run_benchmark,
    run_replicate,
)
from .estimator import (
    ProjectionEstimate,
    Quadrature,
    contrast,
    evaluate,
    fit_projection,
    l2_error_sq,
    sup_norm,
)
from .sampler import (
    CovariateKind,
    CovariateProcessSpec,
    IntensityFunction,
    Sample,
    constant_intensity,
    gen_covariates,
    sample_poisson,
    simulate_dataset,
    test_intensity,
)
from .selection import (
    Partition,
    PenaltySpec,
    PenaltyVariant,
    SelectionResult,
    default_partition,
    fit_plugin_mu,
    pen_dependent,
    pen_known_xi,
    pen_plugin,
    pen_practical,
    select_model,
)

__version__ = "0.1.0"
