"""Generalized empirical likelihood tests for comparing model and data samples."""

__version__ = "0.1.0"

from .diagnostics import (
    ClassReport,
    aggregate_class_weights,
    hellinger_distance,
    oracle_mode_distribution,
    pr_curve_from_weights,
    rank_samples,
)
from .hull import HullVerdict, hull_membership
from .kernels import (
    DeltaLabelKernel,
    ExponentialKernel,
    HierarchyPathKernel,
    LabelHierarchy,
    ProductKernel,
    hierarchy_path_score,
    make_kernel,
)
from .moments import (
    FeatureSet,
    MomentMatrix,
    WitnessSet,
    build_fid_moments,
    build_me_moments,
    build_mean_moments,
    pca_preprocess,
    sample_witnesses,
    wrap_user_moments,
)
from .solvers import (
    DivergenceKind,
    GelSolution,
    SolverConfig,
    Status,
    solve,
    solve_el,
    solve_et,
    solve_euclidean,
    wilks_statistic,
)
from .two_sample import TwoSampleSolution, kgel2, solve_two_sample, stack_two_sample

__all__ = [
    "ClassReport",
    "DeltaLabelKernel",
    "DivergenceKind",
    "ExponentialKernel",
    "FeatureSet",
    "GelSolution",
    "HierarchyPathKernel",
    "HullVerdict",
    "LabelHierarchy",
    "MomentMatrix",
    "ProductKernel",
    "SolverConfig",
    "Status",
    "TwoSampleSolution",
    "WitnessSet",
    "aggregate_class_weights",
    "build_fid_moments",
    "build_me_moments",
    "build_mean_moments",
    "hellinger_distance",
    "hierarchy_path_score",
    "hull_membership",
    "kgel2",
    "make_kernel",
    "oracle_mode_distribution",
    "pca_preprocess",
    "pr_curve_from_weights",
    "rank_samples",
    "sample_witnesses",
    "solve",
    "solve_el",
    "solve_et",
    "solve_euclidean",
    "solve_two_sample",
    "stack_two_sample",
    "wilks_statistic",
    "wrap_user_moments",
]
