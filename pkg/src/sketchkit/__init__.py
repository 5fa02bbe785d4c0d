"""Learned sketching of weight matrices for parameter-efficient fine-tuning."""

__version__ = "0.1.0"

from .calibration import HessianFactor, SingularHessianError, build_hessian, synth_calibration
from .delta import DeltaReport, compare_sweep, lowrank_delta_error, project_onto_mapping, sketch_delta_error
from .finetune import OptimState, TrainingDivergedError, TrainTask, delta_realized, train
from .formats import FormatError, read_mat1, read_skt1, write_mat1, write_skt1
from .kmeans import Assignment, weighted_kmeans
from .numerics import NotPositiveDefiniteError, ShapeError, cholesky, make_rng, matmul, spd_inverse, truncated_svd
from .runtime import SketchedMatrix, forward, grad_sketched, pack_indices, reconstruct, unpack_indices
from .sketch import (
    SketchConfig,
    build_sketching_matrix,
    count_trainable_params,
    learn_to_sketch_row,
    row_objective,
    rtn,
    sketch_matrix,
)
from .theory import (
    PowerLawSpec,
    crossover_eta,
    lowrank_error_theory,
    monte_carlo_fold,
    sketch_error_theory,
)

__all__ = [
    "Assignment",
    "DeltaReport",
    "FormatError",
    "HessianFactor",
    "NotPositiveDefiniteError",
    "OptimState",
    "PowerLawSpec",
    "ShapeError",
    "SingularHessianError",
    "SketchConfig",
    "SketchedMatrix",
    "TrainTask",
    "TrainingDivergedError",
    "build_hessian",
    "build_sketching_matrix",
    "cholesky",
    "compare_sweep",
    "count_trainable_params",
    "crossover_eta",
    "delta_realized",
    "forward",
    "grad_sketched",
    "learn_to_sketch_row",
    "lowrank_delta_error",
    "lowrank_error_theory",
    "make_rng",
    "matmul",
    "monte_carlo_fold",
    "pack_indices",
    "project_onto_mapping",
    "read_mat1",
    "read_skt1",
    "reconstruct",
    "row_objective",
    "rtn",
    "sketch_delta_error",
    "sketch_error_theory",
    "sketch_matrix",
    "spd_inverse",
    "synth_calibration",
    "train",
    "truncated_svd",
    "unpack_indices",
    "weighted_kmeans",
    "write_mat1",
    "write_skt1",
]
