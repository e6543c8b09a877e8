"""Bi-CG and Bi-CR solvers, the residual smoothing that maps one onto the
other, and numerical checks of the resulting bi-orthogonality."""

from .history import SmoothedState, SolverConfig, SolverHistory
from .linalg import (
    CountingOperator,
    CsrMatrix,
    DenseMatrix,
    PairedVector,
    dot,
    matvec,
    matvec_transpose,
    norm,
    quasi_inner_product,
    spd_random,
    toeplitz_test_matrix,
)
from .solvers import (
    apply_mrs,
    apply_qmrs,
    compute_eta_variants,
    mrs_step,
    qmrs_step,
    run_bicg,
    run_bicr,
    run_cg,
    run_cr,
    run_extended_cg,
    run_transform_concise,
    run_transform_original,
)

__version__ = "0.1.0"
