"""
sgnn-lab: Separable Gaussian neural networks and their baselines.

This top-level package exposes the models, the trainer, the analysis tools
and the verification harness, so most scripts only need one import.

Example:
    from sgnnlab import SgnnModel, TrainConfig, make_candidate, make_rng

Attributes:
    __version__ (str): The current version of the sgnn-lab library.
"""

__version__ = "0.1.0"

from .analysis import (
    ComplexityReport,
    DominanceReport,
    HessianBundle,
    complexity_report,
    dominance_report,
    grbfnn_counts,
    grbfnn_weight_hessian,
    hessian_bundle,
    mapping_jacobian,
    projected_hessian,
    sgnn_flops,
    sgnn_trainable_count,
    write_spectrum_csv,
)
from .candidates import (
    CandidateFunction,
    Dataset,
    grid_points,
    grid_slice,
    make_candidate,
    sample_dataset,
)
from .config import ExperimentConfig, build_config, read_config_file
from .errors import CapacityError, ConfigError, SgnnLabError, ShapeError
from .grbfnn import (
    AnisotropicGrbfnn,
    GrbfnnModel,
    flat_unit_index,
    sgnn_to_grbfnn,
    unit_tuples,
)
from .history import BaseHistory, EpochRecord, VolatileHistory, write_training_log
from .linalg import make_rng, matmul, spawn_seeds, sym_eigen, uniform_sample
from .mlp import Activation, MlpModel, mlp_param_count
from .networks import BaseNetwork, load_network, save_network
from .sgnn import SgnnModel, gaussian_activation
from .trainer import (
    AdamState,
    EarlyStopping,
    LossKind,
    StopReason,
    TrainConfig,
    TrainReport,
    adam_step,
    compute_loss,
    measure_epoch_time,
    train,
)
from .verification import (
    Check,
    CheckOutcome,
    VerificationResult,
    VerificationSuite,
    Verifier,
)

__all__ = [
    "__version__",
    # Models
    "BaseNetwork",
    "SgnnModel",
    "GrbfnnModel",
    "AnisotropicGrbfnn",
    "MlpModel",
    "Activation",
    "gaussian_activation",
    "sgnn_to_grbfnn",
    "flat_unit_index",
    "unit_tuples",
    "save_network",
    "load_network",
    # Data
    "CandidateFunction",
    "Dataset",
    "make_candidate",
    "sample_dataset",
    "grid_points",
    "grid_slice",
    # Training
    "TrainConfig",
    "TrainReport",
    "AdamState",
    "EarlyStopping",
    "LossKind",
    "StopReason",
    "adam_step",
    "compute_loss",
    "train",
    "measure_epoch_time",
    "BaseHistory",
    "VolatileHistory",
    "EpochRecord",
    "write_training_log",
    # Analysis
    "ComplexityReport",
    "HessianBundle",
    "DominanceReport",
    "sgnn_trainable_count",
    "grbfnn_counts",
    "sgnn_flops",
    "mlp_param_count",
    "complexity_report",
    "grbfnn_weight_hessian",
    "mapping_jacobian",
    "projected_hessian",
    "hessian_bundle",
    "dominance_report",
    "write_spectrum_csv",
    # Verification
    "Check",
    "CheckOutcome",
    "VerificationSuite",
    "VerificationResult",
    "Verifier",
    # Utilities
    "make_rng",
    "spawn_seeds",
    "matmul",
    "sym_eigen",
    "uniform_sample",
    "ExperimentConfig",
    "build_config",
    "read_config_file",
    # Errors
    "SgnnLabError",
    "ShapeError",
    "CapacityError",
    "ConfigError",
]
