"""Dense matrix container, products, orthonormalization and a small SVD.

Everything here is float64.  :class:`DenseMatrix` caches the squared row,
column and Frobenius norms that the samplers and solvers need on every
iteration, and is treated as immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ArgumentError, RankDeficiencyError

SVD_SIZE_CAP = 2000
RANK_RTOL = 1e-12


class DenseMatrix:
    """Row-major float64 matrix with cached squared norms.

    The entries array is copied and marked read-only, so the caches can
    never go stale.  ``cols_t`` holds a contiguous copy of the transpose
    so column access in the column-action solvers is a unit-stride read.
    """

    __slots__ = ("entries", "cols_t", "row_norms_sq", "col_norms_sq", "frob_sq")

    def __init__(self, entries):
        a = np.array(entries, dtype=np.float64, order="C", copy=True)
        if a.ndim == 1:
            a = a.reshape(1, -1)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ArgumentError(f"expected a non-empty 2-D array, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ArgumentError("matrix entries must be finite")
        a.setflags(write=False)
        self.entries = a
        self.cols_t = np.ascontiguousarray(a.T)
        self.cols_t.setflags(write=False)
        self.row_norms_sq = np.einsum("ij,ij->i", a, a)
        self.col_norms_sq = np.einsum("ij,ij->j", a, a)
        self.frob_sq = float(self.row_norms_sq.sum())
        self.row_norms_sq.setflags(write=False)
        self.col_norms_sq.setflags(write=False)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def row(self, i: int) -> np.ndarray:
        return self.entries[i]

    def col(self, j: int) -> np.ndarray:
        return self.cols_t[j]

    def is_zero(self) -> bool:
        return self.frob_sq == 0.0

    def to_numpy(self) -> np.ndarray:
        return np.array(self.entries)

    def __repr__(self) -> str:
        return f"DenseMatrix({self.rows}x{self.cols}, frob_sq={self.frob_sq:.6g})"


def as_dense(A) -> DenseMatrix:
    return A if isinstance(A, DenseMatrix) else DenseMatrix(A)


def _as_vector(v, length: int, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != length:
        raise ArgumentError(f"{name} must be a vector of length {length}, got shape {v.shape}")
    return v


def matvec(A: DenseMatrix, x) -> np.ndarray:
    """Return ``A @ x``."""
    A = as_dense(A)
    return A.entries @ _as_vector(x, A.cols, "x")


def matvec_transpose(A: DenseMatrix, y) -> np.ndarray:
    """Return ``A.T @ y``."""
    A = as_dense(A)
    return A.cols_t @ _as_vector(y, A.rows, "y")


def orthonormalize_columns(M, *, drop_tol: float = 1e-10) -> DenseMatrix:
    """Modified Gram-Schmidt with a second (re-orthogonalization) pass.

    Raises RankDeficiencyError when a column loses all but ``drop_tol`` of
    its original norm to the previous columns.
    """
    M = as_dense(M)
    Q = M.to_numpy()
    m, n = Q.shape
    if n > m:
        raise RankDeficiencyError(f"{n} columns cannot be independent in R^{m}")
    for k in range(n):
        v = Q[:, k]
        initial = np.sqrt(v @ v)
        if initial == 0.0:
            raise RankDeficiencyError(f"column {k} is zero")
        for _ in range(2):
            for i in range(k):
                q = Q[:, i]
                v -= (q @ v) * q
        nrm = np.sqrt(v @ v)
        if nrm < drop_tol * initial:
            raise RankDeficiencyError(
                f"column {k} is numerically dependent on the previous columns "
                f"(residual norm {nrm:.3e} vs initial {initial:.3e})"
            )
        v /= nrm
    return DenseMatrix(Q)


@dataclass(frozen=True)
class SpectralData:
    singular_values: np.ndarray
    rank: int
    sigma_max: float
    sigma_min_nonzero: float

    @classmethod
    def from_values(cls, values, shape: tuple[int, int], rtol: float = RANK_RTOL) -> "SpectralData":
        s = np.sort(np.abs(np.asarray(values, dtype=np.float64)))[::-1].copy()
        s.setflags(write=False)
        sigma_max = float(s[0]) if s.size else 0.0
        tol = max(shape) * sigma_max * rtol
        rank = int(np.count_nonzero(s > tol)) if sigma_max > 0 else 0
        sigma_min = float(s[rank - 1]) if rank else 0.0
        return cls(s, rank, sigma_max, sigma_min)


@dataclass(frozen=True)
class SVDResult:
    """Thin factors ``A = u @ diag(s) @ v.T`` with ``p = min(m, n)`` columns."""

    spectral: SpectralData
    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    def row_space_basis(self) -> np.ndarray:
        return self.v[:, : self.spectral.rank]

    def col_space_basis(self) -> np.ndarray:
        return self.u[:, : self.spectral.rank]


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    # circle-method tournament: every pair once per sweep, disjoint within a round
    players = list(range(n)) + ([-1] if n % 2 else [])
    N = len(players)
    rounds = []
    for _ in range(N - 1):
        p, q = [], []
        for a, b in zip(players[: N // 2], players[::-1][: N // 2]):
            if a >= 0 and b >= 0:
                p.append(min(a, b))
                q.append(max(a, b))
        rounds.append((np.array(p, dtype=np.intp), np.array(q, dtype=np.intp)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi_one_sided(G: np.ndarray, max_sweeps: int = 60, tol: float = 1e-15):
    """Hestenes one-sided Jacobi on a tall matrix; rotates columns in place."""
    m, n = G.shape
    V = np.eye(n)
    rounds = _round_robin(n)
    scale = np.einsum("ij,ij->", G, G)
    tiny = (np.finfo(float).eps ** 2) * scale
    for _ in range(max_sweeps):
        rotated = False
        for p, q in rounds:
            if p.size == 0:
                continue
            gp, gq = G[:, p], G[:, q]
            alpha = np.einsum("ij,ij->j", gp, gp)
            beta = np.einsum("ij,ij->j", gq, gq)
            gamma = np.einsum("ij,ij->j", gp, gq)
            act = (np.abs(gamma) > tol * np.sqrt(alpha * beta)) & (alpha > tiny) & (beta > tiny)
            if not act.any():
                continue
            rotated = True
            p, q = p[act], q[act]
            alpha, beta, gamma = alpha[act], beta[act], gamma[act]
            zeta = (beta - alpha) / (2.0 * gamma)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            gp, gq = G[:, p], G[:, q]
            G[:, p] = c * gp - s * gq
            G[:, q] = s * gp + c * gq
            vp, vq = V[:, p], V[:, q]
            V[:, p] = c * vp - s * vq
            V[:, q] = s * vp + c * vq
        if not rotated:
            break
    return G, V


def svd_small(A, *, size_cap: int = SVD_SIZE_CAP) -> SVDResult:
    """Thin SVD by one-sided Jacobi, sorted by non-increasing singular value.

    The rank is the number of singular values above
    ``max(m, n) * sigma_1 * 1e-12``.
    """
    A = as_dense(A)
    m, n = A.shape
    if min(m, n) > size_cap:
        raise ArgumentError(f"min(rows, cols) = {min(m, n)} exceeds the SVD size cap {size_cap}")
    transposed = m < n
    G = A.to_numpy().T.copy() if transposed else A.to_numpy()
    G, W = _jacobi_one_sided(G)
    s = np.sqrt(np.einsum("ij,ij->j", G, G))
    order = np.argsort(-s, kind="stable")
    s, G, W = s[order], G[:, order], W[:, order]
    U = np.zeros_like(G)
    nz = s > 0
    U[:, nz] = G[:, nz] / s[nz]
    if transposed:
        U, W = W, U
    spectral = SpectralData.from_values(s, (m, n))
    return SVDResult(spectral, U, s, W)


def pinv_from_svd(svd: SVDResult) -> np.ndarray:
    r = svd.spectral.rank
    return (svd.v[:, :r] / svd.s[:r]) @ svd.u[:, :r].T


def pinv_solve_oracle(A, b, svd: Optional[SVDResult] = None) -> np.ndarray:
    """Pseudoinverse solution ``V diag(1/s) U^T b`` over the numerically nonzero ``s``."""
    A = as_dense(A)
    b = _as_vector(b, A.rows, "b")
    if svd is None:
        svd = svd_small(A)
    r = svd.spectral.rank
    coeffs = (svd.u[:, :r].T @ b) / svd.s[:r]
    return svd.v[:, :r] @ coeffs
