"""Additive kernel models by componentwise least squares SVMs.

Training an additive model with one kernel per input component costs a
single bordered linear solve; structure detection (which components
matter) comes from L1 component regularization, a bounded smoothly
thresholding penalty optimized by weighted graduated non-convexity, and
fusion of training with a validation criterion.
"""

from .data import CVPlan, Dataset, generate_vapnik, kfold_cv, load_csv, preprocess_log_standardize
from .fusion import ValidationSplit, fuse_areg_select, fuse_eta_als, train_eta_model, tune_gamma_grid
from .kernels import KernelEntry, KernelSpec, build_grams, eval_kernel, full_rbf_gram, mixed_library
from .lssvm import (
    TrainedModel,
    load_model,
    model_from_json,
    model_to_json,
    save_model,
    smoother_matrix,
    train_classifier,
    train_regressor,
)
from .solvers import IllConditionedError, KKTSystem, NumericalError, SolveReport, irls_minimize, solve_kkt
from .structure import (
    ComponentFitResult,
    fit_l1_components,
    fit_stp_components,
    prune_components,
    solve_areg_substrate,
    stp_penalty,
)
from .wgnc import Penalty, RelaxationSchedule, reweight, wgnc_minimize

__version__ = "0.1.0"

__all__ = [
    "CVPlan",
    "ComponentFitResult",
    "Dataset",
    "IllConditionedError",
    "KKTSystem",
    "KernelEntry",
    "KernelSpec",
    "NumericalError",
    "Penalty",
    "RelaxationSchedule",
    "SolveReport",
    "TrainedModel",
    "ValidationSplit",
    "build_grams",
    "eval_kernel",
    "fit_l1_components",
    "fit_stp_components",
    "full_rbf_gram",
    "fuse_areg_select",
    "fuse_eta_als",
    "generate_vapnik",
    "irls_minimize",
    "kfold_cv",
    "load_csv",
    "load_model",
    "mixed_library",
    "model_from_json",
    "model_to_json",
    "preprocess_log_standardize",
    "prune_components",
    "reweight",
    "save_model",
    "smoother_matrix",
    "solve_areg_substrate",
    "solve_kkt",
    "stp_penalty",
    "train_classifier",
    "train_eta_model",
    "train_regressor",
    "tune_gamma_grid",
    "wgnc_minimize",
]
