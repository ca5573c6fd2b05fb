"""Randomized Kaczmarz and Gauss-Seidel solvers, extended variants, and
their expected-error bounds for pseudoinverse solutions of dense systems."""

from .bounds import (
    BoundCurve,
    BoundInputs,
    BoundKind,
    bound_curve,
    bound_inputs,
    bound_regs_e,
    bound_regs_e_unrolled,
    bound_regs_mnr,
    bound_rek_s,
    bound_rek_s_unrolled,
    bound_rek_zf,
    rho,
)
from .dense import (
    DenseMatrix,
    SpectralData,
    matvec,
    matvec_transpose,
    orthonormalize_columns,
    pinv_solve_oracle,
    svd_small,
)
from .errors import ArgumentError, RankDeficiencyError, SubspaceError
from .experiment import ExperimentConfig, ExperimentResult, classify_table1, emit_csv, emit_plot, run_experiment
from .problems import Problem, generate_matrix, generate_problem, load_problem, make_consistent, make_inconsistent, save_problem
from .sampling import RngStream, ScriptedIndices, WeightedSampler, draw, problem_rng, sampler_from_cols, sampler_from_rows
from .solvers import (
    Algorithm,
    ErrorRecord,
    IterationTrace,
    SolverState,
    initial_state,
    regs_e_run,
    regs_mnr_run,
    rek_s_run,
    rek_zf_run,
    rgs_run,
    rgs_step,
    rk_null_step,
    rk_run,
    rk_step,
    run,
)

__version__ = "0.1.0"
