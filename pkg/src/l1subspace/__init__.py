"""Rotationally invariant L1-norm subspace estimation."""

from .core import (
    AdaptiveBeta,
    DataMatrix,
    FixedBeta,
    IterateTriple,
    SignMatrix,
    SolverConfig,
    StiefelPoint,
    objective_h,
    objective_l,
    potential_phi,
    sign_select,
)

from .data import (
    GrayImage,
    LabeledDataset,
    SyntheticTruth,
    add_block_outliers,
    center_features,
    corrupt_image,
    crop_to_grid,
    gen_synthetic,
    image_columns,
    laplace_sample,
    parse_libsvm,
    read_csv_matrix,
    read_pgm,
    stack_images,
    unstack_images,
    write_csv_matrix,
    write_libsvm,
    write_pgm,
)
from .linalg import (
    polar_factor,
    random_stiefel,
    singular_values,
    spectral_norm,
    thin_svd,
    top_k_left_singular,
)
from .metrics import (
    GapTraces,
    RateFit,
    choose_k_energy,
    clustering_accuracy,
    fit_linear_rate,
    gap_traces,
    kmeans,
    l2_baseline_energy,
    reconstruct,
    tev,
)
from .solvers import (
    DecreaseReport,
    RunReport,
    RunTrace,
    adaptive_beta,
    check_alpha_condition,
    criticality_residual,
    extrapolate,
    gamma_star,
    solve,
    sufficient_decrease_check,
    update_P,
    update_Q,
)

__all__ = [
    "AdaptiveBeta",
    "DataMatrix",
    "DecreaseReport",
    "FixedBeta",
    "GapTraces",
    "GrayImage",
    "IterateTriple",
    "LabeledDataset",
    "RateFit",
    "RunReport",
    "RunTrace",
    "SignMatrix",
    "SolverConfig",
    "StiefelPoint",
    "SyntheticTruth",
    "adaptive_beta",
    "add_block_outliers",
    "center_features",
    "check_alpha_condition",
    "choose_k_energy",
    "clustering_accuracy",
    "corrupt_image",
    "criticality_residual",
    "crop_to_grid",
    "extrapolate",
    "fit_linear_rate",
    "gamma_star",
    "gap_traces",
    "gen_synthetic",
    "image_columns",
    "kmeans",
    "l2_baseline_energy",
    "laplace_sample",
    "objective_h",
    "objective_l",
    "parse_libsvm",
    "polar_factor",
    "potential_phi",
    "random_stiefel",
    "read_csv_matrix",
    "read_pgm",
    "reconstruct",
    "sign_select",
    "singular_values",
    "solve",
    "spectral_norm",
    "stack_images",
    "sufficient_decrease_check",
    "tev",
    "thin_svd",
    "top_k_left_singular",
    "unstack_images",
    "update_P",
    "update_Q",
    "write_csv_matrix",
    "write_libsvm",
    "write_pgm",
]

__version__ = "0.1.0"
