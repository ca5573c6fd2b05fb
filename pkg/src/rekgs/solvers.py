"""Randomized Kaczmarz / Gauss-Seidel solvers and their extended variants.

Single-step kernels (``rk_step``, ``rk_null_step``, ``rgs_step``) are pure
and return new arrays; the runners work in place on a :class:`SolverState`
and report squared errors against the problem's ``x_star`` through an
optional trace hook ``hook(record, state)``.

Per-iteration draw order in the extended methods is column first, then row.

=========  ===========================  =====================================
algorithm  estimate of ``A^+ b``        auxiliary error in the trace
=========  ===========================  =====================================
RK         ``x``                        none
RGS        ``x``                        ``||A x - A A^+ b||^2``
REK_ZF     ``x``                        ``||z - (I - A A^+) b||^2``
REK_S      ``x``                        ``||z - (I - A A^+) b||^2``
REGS_MNR   ``x - z``                    ``||A x - A A^+ b||^2``
REGS_E     ``z``                        ``||A x - A A^+ b||^2``
=========  ===========================  =====================================
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .dense import DenseMatrix, as_dense, svd_small
from .errors import ArgumentError, SubspaceError
from .problems import Problem
from .sampling import sampler_from_cols, sampler_from_rows

SUBSPACE_RTOL = 1e-10


class Algorithm(str, enum.Enum):
    RK = "rk"
    RGS = "rgs"
    REK_ZF = "rek_zf"
    REK_S = "rek_s"
    REGS_MNR = "regs_mnr"
    REGS_E = "regs_e"

    @classmethod
    def parse(cls, name: str) -> "Algorithm":
        key = name.strip().lower().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            raise ArgumentError(f"unknown algorithm {name!r}; choose from "
                                f"{', '.join(a.value for a in cls)}") from None

    @property
    def extended(self) -> bool:
        return self not in (Algorithm.RK, Algorithm.RGS)

    @property
    def label(self) -> str:
        return self.value.upper().replace("_", "-")


class ErrorRecord(NamedTuple):
    k: int
    err_sq: float
    aux_sq: Optional[float] = None


@dataclass
class SolverState:
    algorithm: Algorithm
    x: np.ndarray
    z: Optional[np.ndarray] = None
    k: int = 0
    # RGS-family only: A x - b, maintained incrementally
    residual: Optional[np.ndarray] = field(default=None, repr=False)

    def estimate(self) -> np.ndarray:
        if self.algorithm is Algorithm.REGS_MNR:
            return self.x - self.z
        if self.algorithm is Algorithm.REGS_E:
            return self.z
        return self.x


@dataclass
class IterationTrace:
    """Trace hook that keeps every record it is given."""

    records: list[ErrorRecord] = field(default_factory=list)

    def __call__(self, record: ErrorRecord, state: Optional[SolverState] = None) -> None:
        if self.records and record.k <= self.records[-1].k:
            raise ArgumentError("trace iterations must be strictly increasing")
        self.records.append(record)

    @property
    def ks(self) -> np.ndarray:
        return np.array([r.k for r in self.records], dtype=np.int64)

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.err_sq for r in self.records])

    @property
    def aux(self) -> np.ndarray:
        return np.array([np.nan if r.aux_sq is None else r.aux_sq for r in self.records])


TraceHook = Callable[[ErrorRecord, SolverState], None]


# --- single-step kernels -----------------------------------------------------

def _row_norm(A: DenseMatrix, i: int) -> float:
    nrm = A.row_norms_sq[i]
    if nrm == 0.0:
        raise ArgumentError(f"row {i} is zero")
    return nrm


def _col_norm(A: DenseMatrix, j: int) -> float:
    nrm = A.col_norms_sq[j]
    if nrm == 0.0:
        raise ArgumentError(f"column {j} is zero")
    return nrm


def rk_step(A, b, x, i: int) -> np.ndarray:
    """Project ``x`` onto the hyperplane ``a_i^T x = b_i``."""
    A = as_dense(A)
    a = A.row(i)
    x = np.asarray(x, dtype=np.float64)
    return x - ((a @ x - b[i]) / _row_norm(A, i)) * a


def rk_null_step(A, z, j: int) -> np.ndarray:
    """Project ``z`` onto the hyperplane ``a_j^T z = 0`` (``a_j`` a column)."""
    A = as_dense(A)
    a = A.col(j)
    z = np.asarray(z, dtype=np.float64)
    return z - ((a @ z) / _col_norm(A, j)) * a


def rgs_step(A, b, x, residual, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact line search along ``e_j`` on ``||A x - b||^2``.

    ``residual`` must equal ``A x - b``; the updated residual is returned
    alongside the new iterate.
    """
    A = as_dense(A)
    a = A.col(j)
    delta = -(a @ residual) / _col_norm(A, j)
    x = np.array(x, dtype=np.float64)
    x[j] += delta
    return x, residual + delta * a


# --- initial states ----------------------------------------------------------

def _bases(problem: Problem) -> tuple[np.ndarray, np.ndarray]:
    if problem.row_basis is not None and problem.col_basis is not None:
        return problem.row_basis, problem.col_basis
    svd = svd_small(problem.A)
    return svd.row_space_basis(), svd.col_space_basis()


def _check_in_span(v: np.ndarray, basis: np.ndarray, scale: float, what: str) -> None:
    off = v - basis @ (basis.T @ v)
    off = off - basis @ (basis.T @ off)
    if np.linalg.norm(off) > SUBSPACE_RTOL * max(scale, np.finfo(float).tiny):
        raise SubspaceError(f"{what} (off-subspace norm {np.linalg.norm(off):.3e})")


def _vec(v, n: int, name: str) -> np.ndarray:
    v = np.array(v, dtype=np.float64)
    if v.shape != (n,):
        raise ArgumentError(f"{name} must have length {n}, got shape {v.shape}")
    return v


def initial_state(problem: Problem, algorithm: Algorithm | str, x0=None, z0=None,
                  *, validate: bool = True) -> SolverState:
    """Default or validated starting point for ``algorithm``.

    Defaults: ``x0 = 0`` everywhere; ``z0 = b`` for REK variants and
    ``z0 = 0`` for REGS variants.
    """
    alg = Algorithm.parse(algorithm) if isinstance(algorithm, str) else algorithm
    A, b = problem.A, problem.b
    m, n = A.shape
    user_x, user_z = x0 is not None, z0 is not None
    x = np.zeros(n) if x0 is None else _vec(x0, n, "x0")
    z = None
    if alg in (Algorithm.REK_ZF, Algorithm.REK_S):
        z = b.copy() if z0 is None else _vec(z0, m, "z0")
    elif alg in (Algorithm.REGS_MNR, Algorithm.REGS_E):
        z = np.zeros(n) if z0 is None else _vec(z0, n, "z0")
    elif z0 is not None:
        raise ArgumentError(f"{alg.label} has no auxiliary iterate")

    if validate and (user_x or user_z) and alg.extended:
        rows, cols = _bases(problem)
        if alg in (Algorithm.REK_ZF, Algorithm.REK_S):
            _check_in_span(x, rows, np.linalg.norm(x), "x0 must lie in ran(A^T)")
            _check_in_span(z - b, cols, max(np.linalg.norm(z), np.linalg.norm(b)),
                           "z0 must lie in b + ran(A)")
        elif alg is Algorithm.REGS_E:
            _check_in_span(z, rows, np.linalg.norm(z), "z0 must lie in ran(A^T)")
        else:
            _check_in_span(z - x, rows, max(np.linalg.norm(z), np.linalg.norm(x)),
                           "z0 must lie in x0 + ran(A^T)")

    state = SolverState(alg, x, z, 0)
    if alg in (Algorithm.RGS, Algorithm.REGS_MNR, Algorithm.REGS_E):
        state.residual = A.entries @ x - b
    return state


# --- error bookkeeping --------------------------------------------------------

def _sq(v: np.ndarray) -> float:
    return float(v @ v)


def error_record(problem: Problem, state: SolverState) -> ErrorRecord:
    alg = state.algorithm
    err = _sq(state.estimate() - problem.x_star)
    if alg in (Algorithm.REK_ZF, Algorithm.REK_S):
        aux = _sq(state.z - problem.resid_star)
    elif alg is Algorithm.RK:
        aux = None
    else:
        # A x - A A^+ b = (A x - b) + (I - A A^+) b
        aux = _sq(state.residual + problem.resid_star)
    return ErrorRecord(state.k, err, aux)


# --- runners ------------------------------------------------------------------

def run(algorithm: Algorithm | str, problem: Problem, iters: int, rng,
        trace_hook: Optional[TraceHook] = None, *, x0=None, z0=None,
        record_every: int = 1, state: Optional[SolverState] = None) -> SolverState:
    """Run ``iters`` iterations of ``algorithm`` and return the final state.

    ``rng`` is anything with a ``draw(sampler) -> index`` method: an
    :class:`~rekgs.sampling.RngStream`, or a
    :class:`~rekgs.sampling.ScriptedIndices` to force the index sequence.
    The hook fires at ``k = 0``, at every multiple of ``record_every`` and
    after the last iteration.  Passing ``state`` resumes from it.
    """
    if iters < 0:
        raise ArgumentError("iters must be non-negative")
    if record_every < 1:
        raise ArgumentError("record_every must be >= 1")
    if state is None:
        state = initial_state(problem, algorithm, x0, z0)
    alg = state.algorithm
    A = problem.A
    if A.is_zero():
        raise ArgumentError("all-zero matrix")
    k_end = state.k + iters
    if trace_hook is not None and state.k == 0:
        trace_hook(error_record(problem, state), state)

    loop = _LOOPS[alg]
    rows = sampler_from_rows(A) if alg is not Algorithm.RGS else None
    cols = sampler_from_cols(A) if alg is not Algorithm.RK else None
    refresh = 10 * max(A.shape)

    while state.k < k_end:
        chunk_end = k_end
        if trace_hook is not None:
            chunk_end = min(k_end, (state.k // record_every + 1) * record_every)
        loop(problem, state, chunk_end - state.k, rng, rows, cols, refresh)
        if trace_hook is not None:
            trace_hook(error_record(problem, state), state)
    return state


def _rk_loop(problem, state, steps, rng, rows, cols, refresh):
    A, b, x = problem.A, problem.b, state.x
    E, rn = A.entries, A.row_norms_sq
    for _ in range(steps):
        i = rng.draw(rows)
        a = E[i]
        x -= ((a @ x - b[i]) / rn[i]) * a
    state.k += steps


def _rgs_loop(problem, state, steps, rng, rows, cols, refresh):
    A, x, res = problem.A, state.x, state.residual
    C, cn = A.cols_t, A.col_norms_sq
    for _ in range(steps):
        j = rng.draw(cols)
        a = C[j]
        delta = -(a @ res) / cn[j]
        x[j] += delta
        res += delta * a
        state.k += 1
        if state.k % refresh == 0:
            res[:] = A.entries @ x - problem.b


def _rek_loop(post_update: bool):
    def loop(problem, state, steps, rng, rows, cols, refresh):
        A, b, x, z = problem.A, problem.b, state.x, state.z
        E, C = A.entries, A.cols_t
        rn, cn = A.row_norms_sq, A.col_norms_sq
        for _ in range(steps):
            j = rng.draw(cols)
            c = C[j]
            coef = (c @ z) / cn[j]
            z -= coef * c
            i = rng.draw(rows)
            # z_i before this iteration's column update, for REK-ZF
            zi = z[i] if post_update else z[i] + coef * c[i]
            a = E[i]
            x -= ((a @ x - b[i] + zi) / rn[i]) * a
        state.k += steps
    return loop


def _regs_loop(equivalent_form: bool):
    def loop(problem, state, steps, rng, rows, cols, refresh):
        A, x, z, res = problem.A, state.x, state.z, state.residual
        E, C = A.entries, A.cols_t
        rn, cn = A.row_norms_sq, A.col_norms_sq
        for _ in range(steps):
            j = rng.draw(cols)
            c = C[j]
            delta = -(c @ res) / cn[j]
            x[j] += delta
            res += delta * c
            i = rng.draw(rows)
            a = E[i]
            if equivalent_form:
                # z <- z - a_i^T (z - x) / ||a_i||^2 a_i
                z -= ((a @ z - a @ x) / rn[i]) * a
            else:
                # z <- P_i (z + x_new - x_old)
                z[j] += delta
                z -= ((a @ z) / rn[i]) * a
            state.k += 1
            if state.k % refresh == 0:
                res[:] = E @ x - problem.b
    return loop


_LOOPS = {
    Algorithm.RK: _rk_loop,
    Algorithm.RGS: _rgs_loop,
    Algorithm.REK_ZF: _rek_loop(post_update=False),
    Algorithm.REK_S: _rek_loop(post_update=True),
    Algorithm.REGS_MNR: _regs_loop(equivalent_form=False),
    Algorithm.REGS_E: _regs_loop(equivalent_form=True),
}


def rk_run(problem, iters, rng, trace_hook=None, **kw) -> SolverState:
    return run(Algorithm.RK, problem, iters, rng, trace_hook, **kw)


def rgs_run(problem, iters, rng, trace_hook=None, **kw) -> SolverState:
    return run(Algorithm.RGS, problem, iters, rng, trace_hook, **kw)


def rek_zf_run(problem, iters, rng, trace_hook=None, **kw) -> SolverState:
    """Extended Kaczmarz, row update driven by the previous ``z``."""
    return run(Algorithm.REK_ZF, problem, iters, rng, trace_hook, **kw)


def rek_s_run(problem, iters, rng, trace_hook=None, **kw) -> SolverState:
    """Extended Kaczmarz, row update driven by the freshly updated ``z``."""
    return run(Algorithm.REK_S, problem, iters, rng, trace_hook, **kw)


def regs_mnr_run(problem, iters, rng, trace_hook=None, **kw) -> SolverState:
    """Extended Gauss-Seidel with projected correction; estimate ``x - z``."""
    return run(Algorithm.REGS_MNR, problem, iters, rng, trace_hook, **kw)


def regs_e_run(problem, iters, rng, trace_hook=None, **kw) -> SolverState:
    """Extended Gauss-Seidel as RGS on ``x`` plus a Kaczmarz step on ``A z = A x``."""
    return run(Algorithm.REGS_E, problem, iters, rng, trace_hook, **kw)
