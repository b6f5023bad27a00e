"""Nonnegative matrix factorization by rank-one residue iteration and friends."""

from .bench import Campaign, RunRecord, gen_random_instance, gen_smooth_mixture, run_campaign
from .constraints import ConstraintSet, DiagonalFactorization, grri_sweep, max_inner, run_grri
from .linalg import ShapeError
from .model import (FactorPair, StopReason, StopRule, gradients, init_scaled, objective,
                    projected_gradient_norm)
from .nnls import NnlsProblem, nnls_gram, solve_nnls
from .regularized import RegularizerSpec, build_smoothing_matrix, run_regularized
from .solvers import Algorithm, SolverConfig, SolverReport, rri_sweep, run
from .svd import nonneg_part_baseline, rank_one_global, saddle_probe, svd, truncate
from .tensor import KruskalTensor, contract_except, kruskal_to_dense, run_tensor_rri, tensor_rri_sweep

__all__ = [
    "Algorithm", "Campaign", "ConstraintSet", "DiagonalFactorization", "FactorPair",
    "KruskalTensor", "NnlsProblem", "RegularizerSpec", "RunRecord", "ShapeError",
    "SolverConfig", "SolverReport", "StopReason", "StopRule", "build_smoothing_matrix",
    "contract_except", "gen_random_instance", "gen_smooth_mixture", "gradients",
    "grri_sweep", "init_scaled", "kruskal_to_dense", "max_inner", "nnls_gram",
    "nonneg_part_baseline", "objective", "projected_gradient_norm", "rank_one_global",
    "rri_sweep", "run", "run_campaign", "run_grri", "run_regularized", "run_tensor_rri",
    "saddle_probe", "solve_nnls", "svd", "tensor_rri_sweep", "truncate",
]
