"""Trajectory optimization with point-valued and ellipsoidal target sets.

Core pieces: a generic DDP/iLQR solver with box control limits
(:mod:`etsddp.solver`), ellipsoidal target-set geometry and smoothed costs
(:mod:`etsddp.ellipsoid`), statistical synthesis of the target set from
labeled data (:mod:`etsddp.synthesis`), the car-parking benchmark
(:mod:`etsddp.car`), and the set-targeted solver plus comparison harness
(:mod:`etsddp.ets`).  The backward-pass hot loop runs on a compiled kernel
when available (see :func:`etsddp.backend.active_backend`).
"""

from .backend import active_backend
from .boxqp import BoxQPResult, IndefiniteHessianError, solve_box_qp
from .car import CarParams, CarPointModel, huber, stage_cost, step, \
    step_jacobians, terminal_cost
from .ellipsoid import BranchFlags, Ellipsoid, ProjectionMode, branch_flags, \
    contains, mahalanobis, offset, offset_curvature, offset_jacobian, \
    project, smoothed_cost_expansion
from .ets import CompareResult, ComparisonRecord, EtsCarModel, EtsConfig, \
    compare, ets_solve, point_solve
from .linear import LinearQuadraticModel
from .riccati import lqr_oracle, riccati_recursion
from .solver import BackwardPassResult, CostExpansion, DynamicsExpansion, \
    GainSchedule, QExpansion, SolveReport, SolverConfig, Trajectory, \
    ValueExpansion, backward_pass, compute_gains, forward_pass, quadratize_q, \
    solve
from .synthesis import Dataset, GaussianEstimate, LabeledSample, chi2_cdf, \
    chi2_quantile, mvn_sample, mvn_sample_many, sample_covariance, \
    sample_mean, synthesize_ellipsoid

__version__ = "0.1.0"

__all__ = [
    "active_backend",
    "BoxQPResult", "IndefiniteHessianError", "solve_box_qp",
    "CarParams", "CarPointModel", "huber", "stage_cost", "step",
    "step_jacobians", "terminal_cost",
    "BranchFlags", "Ellipsoid", "ProjectionMode", "branch_flags", "contains",
    "mahalanobis", "offset", "offset_curvature", "offset_jacobian", "project",
    "smoothed_cost_expansion",
    "CompareResult", "ComparisonRecord", "EtsCarModel", "EtsConfig",
    "compare", "ets_solve", "point_solve",
    "LinearQuadraticModel",
    "lqr_oracle", "riccati_recursion",
    "BackwardPassResult", "CostExpansion", "DynamicsExpansion",
    "GainSchedule", "QExpansion", "SolveReport", "SolverConfig", "Trajectory",
    "ValueExpansion", "backward_pass", "compute_gains", "forward_pass",
    "quadratize_q", "solve",
    "Dataset", "GaussianEstimate", "LabeledSample", "chi2_cdf",
    "chi2_quantile", "mvn_sample", "mvn_sample_many", "sample_covariance",
    "sample_mean", "synthesize_ellipsoid",
]
