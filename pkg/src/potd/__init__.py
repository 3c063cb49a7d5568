"""Supervised linear dimension reduction from optimal-transport
displacement directions, with SIR/SAVE/PCA baselines, synthetic
benchmarks and a KNN evaluation harness."""

from .baselines import pca_fit, save_fit, sir_fit
from .core import (
    Basis,
    DisplacementMatrix,
    LabeledDataset,
    SecondOrderDisplacement,
    displacement_matrix,
    estimate_dimension,
    potd_fit,
    potd_fit_continuous,
    project,
    second_order_displacement,
    whiten,
)
from .errors import (
    ConvergenceError,
    DatasetError,
    DatasetParseError,
    DatasetSchemaError,
    DegenerateInputError,
    InvalidInputError,
    NumericError,
    PotdError,
)
from .harness import (
    BenchmarkReport,
    SplitConfig,
    accuracy,
    evaluate_split,
    fit_method,
    knn_predict,
    load_csv_dataset,
    run_real_benchmark,
    run_synthetic_benchmark,
    save_csv_dataset,
)
from .ot import (
    CouplingMatrix,
    DiscreteMeasure,
    SolverConfig,
    barycentric_projection,
    exact_ot,
    sinkhorn,
    solve_coupling,
    squared_euclidean_cost,
    transport_cost,
)
from .synthetic import (
    SyntheticSpec,
    TrueSubspace,
    gen_cshape,
    gen_model,
    gen_svm3d,
    sin_distance,
    subspace_distance,
)

__version__ = "0.1.0"

__all__ = [
    "Basis",
    "BenchmarkReport",
    "ConvergenceError",
    "CouplingMatrix",
    "DatasetError",
    "DatasetParseError",
    "DatasetSchemaError",
    "DegenerateInputError",
    "DiscreteMeasure",
    "DisplacementMatrix",
    "InvalidInputError",
    "LabeledDataset",
    "NumericError",
    "PotdError",
    "SecondOrderDisplacement",
    "SolverConfig",
    "SplitConfig",
    "SyntheticSpec",
    "TrueSubspace",
    "accuracy",
    "barycentric_projection",
    "displacement_matrix",
    "estimate_dimension",
    "evaluate_split",
    "exact_ot",
    "fit_method",
    "gen_cshape",
    "gen_model",
    "gen_svm3d",
    "knn_predict",
    "load_csv_dataset",
    "pca_fit",
    "potd_fit",
    "potd_fit_continuous",
    "project",
    "run_real_benchmark",
    "run_synthetic_benchmark",
    "save_csv_dataset",
    "save_fit",
    "second_order_displacement",
    "sin_distance",
    "sinkhorn",
    "sir_fit",
    "solve_coupling",
    "squared_euclidean_cost",
    "subspace_distance",
    "transport_cost",
    "whiten",
]
