"""Contraction factor and expected-error bound curves.

All bounds are functions of the iteration count ``k`` (int or integer
array) and a handful of scalars:

* ``rho = 1 - sigma_r^2 / ||A||_F^2``
* REK-ZF (old):   ``rho^floor(k/2) (1 + 2 s1^2/sr^2) ||A^+ b||^2``
* REK-S (new):    ``rho^k e_x + rho^k (1 - rho^k) / sr^2 * e_z``
* REGS-MNR (old): ``rho^k ||A^+ b||^2 + 2 rho^floor(k/2) / sr^2 * ||A A^+ b||^2``
* REGS-E (new):   ``rho^k e_z + rho^k (1 - rho^k) / sr^2 * e_r``

The "unrolled" variants are the exact solution of the one-step recursion
``E_k <= rho E_{k-1} + rho^k c / ||A||_F^2`` that both extended methods
satisfy, i.e. ``rho^k e + k rho^k c / ||A||_F^2``.  That recursion holds
with equality when every nonzero singular value of ``A`` is the same, so
in that case the unrolled form is the exact expected error, and it is
larger than the ``(1 - rho^k) / sr^2`` form for every ``k >= 2``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dense import SpectralData
from .errors import ArgumentError
from .problems import Problem


class BoundKind(str, enum.Enum):
    REK_ZF_OLD = "rek_zf_old"
    REK_S_NEW = "rek_s_new"
    REGS_MNR_OLD = "regs_mnr_old"
    REGS_E_NEW = "regs_e_new"
    REK_S_UNROLLED = "rek_s_unrolled"
    REGS_E_UNROLLED = "regs_e_unrolled"


def rho(spec: SpectralData, frob_sq: float) -> float:
    if spec.rank < 1:
        raise ArgumentError("rho is undefined for a rank-0 matrix")
    return 1.0 - spec.sigma_min_nonzero ** 2 / frob_sq


def _k(k):
    k = np.asarray(k)
    if not np.issubdtype(k.dtype, np.integer):
        if np.any(k != np.floor(k)):
            raise ArgumentError("k must be integral")
        k = k.astype(np.int64)
    if np.any(k < 0):
        raise ArgumentError("k must be non-negative")
    return k


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def bound_rek_zf(k, rho, sigma1, sigmar, norm_pinvb_sq):
    k = _k(k)
    return _out(rho ** (k // 2) * (1.0 + 2.0 * sigma1 ** 2 / sigmar ** 2) * norm_pinvb_sq)


def bound_rek_s(k, rho, sigmar, err0_sq, z_err0_sq):
    k = _k(k)
    rk = rho ** k
    return _out(rk * err0_sq + rk * (1.0 - rk) / sigmar ** 2 * z_err0_sq)


def bound_regs_mnr(k, rho, sigmar, norm_pinvb_sq, norm_proj_b_sq):
    k = _k(k)
    return _out(rho ** k * norm_pinvb_sq + 2.0 * rho ** (k // 2) / sigmar ** 2 * norm_proj_b_sq)


def bound_regs_e(k, rho, sigmar, z_err0_sq, resid0_sq):
    k = _k(k)
    rk = rho ** k
    return _out(rk * z_err0_sq + rk * (1.0 - rk) / sigmar ** 2 * resid0_sq)


def bound_rek_s_unrolled(k, rho, frob_sq, err0_sq, z_err0_sq):
    k = _k(k)
    rk = rho ** k
    return _out(rk * err0_sq + k * rk / frob_sq * z_err0_sq)


def bound_regs_e_unrolled(k, rho, frob_sq, z_err0_sq, resid0_sq):
    k = _k(k)
    rk = rho ** k
    return _out(rk * z_err0_sq + k * rk / frob_sq * resid0_sq)


@dataclass(frozen=True)
class BoundInputs:
    rho: float
    sigma1: float
    sigmar: float
    frob_sq: float
    norm_pinvb_sq: float       # ||A^+ b||^2
    norm_proj_b_sq: float      # ||A A^+ b||^2
    rek_err0_sq: float         # ||x0 - A^+ b||^2, REK start
    rek_z_err0_sq: float       # ||z0 - (I - A A^+) b||^2
    regs_z_err0_sq: float      # ||z0 - A^+ b||^2, REGS-E start
    regs_resid0_sq: float      # ||A x0 - A A^+ b||^2
    source: str                # "factors" or "svd"


def bound_inputs(problem: Problem, *, rek_x0=None, rek_z0=None,
                 regs_x0=None, regs_z0=None) -> BoundInputs:
    """Scalar ingredients of every bound, defaulting to the standard starts.

    REK: ``x0 = 0, z0 = b``.  REGS: ``x0 = 0, z0 = 0``.
    """
    A, b = problem.A, problem.b
    xs, rs = problem.x_star, problem.resid_star
    pb = b - rs
    rek_x0 = np.zeros(A.cols) if rek_x0 is None else np.asarray(rek_x0, float)
    rek_z0 = b if rek_z0 is None else np.asarray(rek_z0, float)
    regs_x0 = np.zeros(A.cols) if regs_x0 is None else np.asarray(regs_x0, float)
    regs_z0 = np.zeros(A.cols) if regs_z0 is None else np.asarray(regs_z0, float)
    sq = lambda v: float(v @ v)  # noqa: E731
    spec = problem.spectral
    return BoundInputs(
        rho=rho(spec, A.frob_sq),
        sigma1=spec.sigma_max,
        sigmar=spec.sigma_min_nonzero,
        frob_sq=A.frob_sq,
        norm_pinvb_sq=sq(xs),
        norm_proj_b_sq=sq(pb),
        rek_err0_sq=sq(rek_x0 - xs),
        rek_z_err0_sq=sq(rek_z0 - rs),
        regs_z_err0_sq=sq(regs_z0 - xs),
        regs_resid0_sq=sq(A.entries @ regs_x0 - pb),
        source="factors" if problem.factors is not None else "svd",
    )


@dataclass(frozen=True)
class BoundCurve:
    kind: BoundKind
    ks: np.ndarray
    values: np.ndarray
    inputs: BoundInputs


def evaluate(kind: BoundKind | str, k, inp: BoundInputs):
    kind = BoundKind(kind)
    if kind is BoundKind.REK_ZF_OLD:
        return bound_rek_zf(k, inp.rho, inp.sigma1, inp.sigmar, inp.norm_pinvb_sq)
    if kind is BoundKind.REK_S_NEW:
        return bound_rek_s(k, inp.rho, inp.sigmar, inp.rek_err0_sq, inp.rek_z_err0_sq)
    if kind is BoundKind.REGS_MNR_OLD:
        return bound_regs_mnr(k, inp.rho, inp.sigmar, inp.norm_pinvb_sq, inp.norm_proj_b_sq)
    if kind is BoundKind.REGS_E_NEW:
        return bound_regs_e(k, inp.rho, inp.sigmar, inp.regs_z_err0_sq, inp.regs_resid0_sq)
    if kind is BoundKind.REK_S_UNROLLED:
        return bound_rek_s_unrolled(k, inp.rho, inp.frob_sq, inp.rek_err0_sq, inp.rek_z_err0_sq)
    return bound_regs_e_unrolled(k, inp.rho, inp.frob_sq, inp.regs_z_err0_sq, inp.regs_resid0_sq)


def bound_curve(kind: BoundKind | str, ks, inputs: BoundInputs) -> BoundCurve:
    ks = _k(np.atleast_1d(ks))
    values = np.asarray(evaluate(kind, ks, inputs), dtype=np.float64)
    return BoundCurve(BoundKind(kind), ks, values, inputs)


# bound kinds attached to each algorithm's curve: (old, new)
ALGORITHM_BOUNDS: dict[str, tuple[Optional[BoundKind], Optional[BoundKind]]] = {
    "rk": (None, None),
    "rgs": (None, None),
    "rek_zf": (BoundKind.REK_ZF_OLD, None),
    "rek_s": (BoundKind.REK_ZF_OLD, BoundKind.REK_S_NEW),
    "regs_mnr": (BoundKind.REGS_MNR_OLD, None),
    "regs_e": (BoundKind.REGS_MNR_OLD, BoundKind.REGS_E_NEW),
}
