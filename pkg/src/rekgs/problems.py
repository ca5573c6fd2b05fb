"""Test systems ``A = U diag(D) V^T`` with known pseudoinverse solution.

Generated problems keep their exact factors, so ``x_star = V D^{-1} U^T b``
and the inconsistency ``resid_star = (I - A A^+) b`` never need a second
factorization.  User-supplied systems fall back to :func:`svd_small`.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dense import DenseMatrix, SpectralData, as_dense, orthonormalize_columns, pinv_solve_oracle, svd_small
from .errors import ArgumentError

FORMAT_MAGIC = "rekgs-problem 1"


@dataclass(frozen=True)
class Factors:
    U: np.ndarray  # m x r, orthonormal columns
    D: np.ndarray  # r diagonal values, unsorted
    V: np.ndarray  # n x r, orthonormal columns


@dataclass(frozen=True)
class Problem:
    A: DenseMatrix
    b: np.ndarray
    x_star: np.ndarray
    resid_star: np.ndarray
    consistent: bool
    spectral: SpectralData
    factors: Optional[Factors] = None
    # orthonormal bases of ran(A^T) and ran(A), for subspace checks
    row_basis: Optional[np.ndarray] = None
    col_basis: Optional[np.ndarray] = None

    @property
    def m(self) -> int:
        return self.A.rows

    @property
    def n(self) -> int:
        return self.A.cols

    @property
    def rank(self) -> int:
        return self.spectral.rank

    @property
    def projected_b(self) -> np.ndarray:
        """``A A^+ b``."""
        return self.b - self.resid_star

    @classmethod
    def from_system(cls, A, b) -> "Problem":
        """Wrap an arbitrary ``(A, b)``, computing ground truth by SVD."""
        A = as_dense(A)
        b = np.array(b, dtype=np.float64)
        if b.shape != (A.rows,):
            raise ArgumentError(f"b must have length {A.rows}, got shape {b.shape}")
        if A.is_zero():
            raise ArgumentError("all-zero matrix: the contraction factor is undefined")
        svd = svd_small(A)
        x_star = pinv_solve_oracle(A, b, svd)
        Ub = svd.col_space_basis()
        resid = b - Ub @ (Ub.T @ b)
        bn = np.linalg.norm(b)
        return cls(
            A=A, b=b, x_star=x_star, resid_star=resid,
            consistent=bool(np.linalg.norm(resid) < 1e-9 * bn) if bn > 0 else True,
            spectral=svd.spectral, factors=None,
            row_basis=svd.row_space_basis(), col_basis=Ub,
        )

    def with_rhs(self, b, resid_star) -> "Problem":
        b = np.asarray(b, dtype=np.float64)
        resid_star = np.asarray(resid_star, dtype=np.float64)
        bn = np.linalg.norm(b)
        if self.factors is not None:
            F = self.factors
            x_star = F.V @ ((F.U.T @ b) / F.D)
        else:
            x_star = pinv_solve_oracle(self.A, b)
        return Problem(
            A=self.A, b=b, x_star=x_star, resid_star=resid_star,
            consistent=bool(np.linalg.norm(resid_star) < 1e-9 * bn) if bn > 0 else True,
            spectral=self.spectral, factors=self.factors,
            row_basis=self.row_basis, col_basis=self.col_basis,
        )


def generate_matrix(m: int, n: int, r: int, sigma1: float, sigmar: float,
                    rng: np.random.Generator) -> tuple[DenseMatrix, Factors]:
    """Random ``m x n`` matrix of rank ``r`` with extreme singular values fixed.

    The first ``r - 2`` entries of D are uniform on ``[sigmar, sigma1]``, the
    last two are ``sigmar`` and ``sigma1``.
    """
    if r < 2:
        raise ArgumentError(f"rank must be at least 2, got {r}")
    if r > min(m, n):
        raise ArgumentError(f"rank {r} exceeds min(m, n) = {min(m, n)}")
    if not 0 < sigmar <= sigma1:
        raise ArgumentError(f"need 0 < sigma_min <= sigma_max, got {sigmar}, {sigma1}")
    U = orthonormalize_columns(rng.standard_normal((m, r))).to_numpy()
    V = orthonormalize_columns(rng.standard_normal((n, r))).to_numpy()
    D = np.concatenate([rng.uniform(sigmar, sigma1, r - 2), [sigmar, sigma1]])
    A = DenseMatrix((U * D) @ V.T)
    return A, Factors(U, D, V)


def _from_factors(A: DenseMatrix, factors: Factors, b, resid_star, consistent) -> Problem:
    F = factors
    spectral = SpectralData.from_values(F.D, A.shape)
    x_star = F.V @ ((F.U.T @ b) / F.D)
    return Problem(A=A, b=b, x_star=x_star, resid_star=resid_star, consistent=consistent,
                   spectral=spectral, factors=F, row_basis=F.V, col_basis=F.U)


def make_consistent(A: DenseMatrix, factors: Factors, rng: np.random.Generator) -> Problem:
    """``b = A x`` for standard-normal ``x``."""
    x_hat = rng.standard_normal(A.cols)
    b = A.entries @ x_hat
    return _from_factors(A, factors, b, np.zeros(A.rows), True)


def make_inconsistent(A: DenseMatrix, factors: Factors, rng: np.random.Generator,
                      resid_scale: Optional[float] = None) -> Problem:
    """``b = A x + r`` with ``r`` in the null space of ``A^T``.

    ``r`` is a standard-normal vector with its ``ran(A)`` component removed
    through the stored ``U``, scaled to norm ``resid_scale`` (default
    ``||A x||``).
    """
    U = factors.U
    if U.shape[1] >= A.rows:
        raise ArgumentError("rank(A) = m: null(A^T) is trivial, no inconsistent right-hand side exists")
    x_hat = rng.standard_normal(A.cols)
    signal = A.entries @ x_hat
    if resid_scale is None:
        resid_scale = float(np.linalg.norm(signal))
    if resid_scale < 0:
        raise ArgumentError("resid_scale must be non-negative")
    for _ in range(100):
        w = rng.standard_normal(A.rows)
        w = w - U @ (U.T @ w)
        w = w - U @ (U.T @ w)
        nw = np.linalg.norm(w)
        if nw > 1e-8:
            break
    else:
        raise ArgumentError("could not draw a residual outside ran(A)")
    r = (resid_scale / nw) * w
    b = signal + r
    consistent = resid_scale == 0
    return _from_factors(A, factors, b, r, consistent)


def generate_problem(m: int, n: int, r: int, sigma1: float, sigmar: float, *,
                     consistent: bool, rng: np.random.Generator,
                     resid_scale: Optional[float] = None) -> Problem:
    A, F = generate_matrix(m, n, r, sigma1, sigmar, rng)
    if consistent:
        return make_consistent(A, F, rng)
    return make_inconsistent(A, F, rng, resid_scale)


# --- persistence -----------------------------------------------------------
# Text format: a magic line, "consistent 0|1", then blocks of
#   array <name> <rows> <cols>
# followed by <rows> lines of space-separated repr() floats (which round-trip
# exactly).  Vectors are stored as <len> x 1.

def _write_array(fh, name: str, a: np.ndarray) -> None:
    a = np.asarray(a, dtype=np.float64)
    mat = a.reshape(-1, 1) if a.ndim == 1 else a
    fh.write(f"array {name} {mat.shape[0]} {mat.shape[1]}\n")
    for row in mat:
        fh.write(" ".join(repr(float(v)) for v in row))
        fh.write("\n")


def save_problem(problem: Problem, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(FORMAT_MAGIC + "\n")
        fh.write(f"consistent {int(problem.consistent)}\n")
        _write_array(fh, "A", problem.A.entries)
        _write_array(fh, "b", problem.b)
        _write_array(fh, "x_star", problem.x_star)
        _write_array(fh, "resid_star", problem.resid_star)
        if problem.factors is not None:
            _write_array(fh, "U", problem.factors.U)
            _write_array(fh, "D", problem.factors.D)
            _write_array(fh, "V", problem.factors.V)


def load_problem(path: str | os.PathLike) -> Problem:
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != FORMAT_MAGIC:
        raise ArgumentError(f"{path}: not a problem file")
    try:
        consistent = bool(int(lines[1].split()[1]))
        arrays = {}
        pos = 2
        while pos < len(lines):
            tag, name, rows, cols = lines[pos].split()
            if tag != "array":
                raise ValueError(f"unexpected line {lines[pos]!r}")
            rows, cols = int(rows), int(cols)
            data = [[float(t) for t in lines[pos + 1 + i].split()] for i in range(rows)]
            arr = np.array(data, dtype=np.float64).reshape(rows, cols)
            arrays[name] = arr[:, 0].copy() if cols == 1 and name not in ("A", "U", "V") else arr
            pos += 1 + rows
    except (IndexError, ValueError) as exc:
        raise ArgumentError(f"{path}: malformed problem file ({exc})") from exc
    A = DenseMatrix(arrays["A"])
    if "U" in arrays:
        F = Factors(arrays["U"], arrays["D"], arrays["V"])
        spectral = SpectralData.from_values(F.D, A.shape)
        return Problem(A=A, b=arrays["b"], x_star=arrays["x_star"], resid_star=arrays["resid_star"],
                       consistent=consistent, spectral=spectral, factors=F,
                       row_basis=F.V, col_basis=F.U)
    loaded = Problem.from_system(A, arrays["b"])
    return Problem(A=A, b=arrays["b"], x_star=arrays["x_star"], resid_star=arrays["resid_star"],
                   consistent=consistent, spectral=loaded.spectral,
                   row_basis=loaded.row_basis, col_basis=loaded.col_basis)
