"""Dense small-matrix kernels shared by the rest of the package.

Everything here works on plain ``numpy`` arrays. The heavy lifting is done by
LAPACK through numpy/scipy; this module adds input validation, the
tolerance conventions used throughout, and a few graded-matrix helpers that
keep the smallest eigenvalue of badly scaled Gramians accurate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import ndtr

DEFAULT_RANK_TOL = 1e-10
DEFAULT_SYM_TOL = 1e-12
DEFAULT_PIVOT_TOL = 1e-12


class DimensionError(ValueError):
    pass


class SymmetryError(ValueError):
    pass


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised when a Cholesky pivot drops below tolerance."""


def as_matrix(M, square: bool = False) -> np.ndarray:
    """Return ``M`` as a finite 2-d float array, raising on bad input."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {M.shape}")
    if square and M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def expm(M) -> np.ndarray:
    """Matrix exponential (scaling and squaring, degree-13 Pade)."""
    M = as_matrix(M, square=True)
    return scipy.linalg.expm(M)


def symmetrize(S: np.ndarray) -> np.ndarray:
    return 0.5 * (S + S.T)


def check_symmetric(S, tol: float = DEFAULT_SYM_TOL) -> np.ndarray:
    S = as_matrix(S, square=True)
    scale = max(1.0, np.max(np.abs(S), initial=0.0))
    if np.max(np.abs(S - S.T), initial=0.0) > tol * scale:
        raise SymmetryError("matrix is not symmetric within tolerance")
    return S


@dataclass(frozen=True)
class SpectralResult:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns, orthonormal

    @property
    def min_eig(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def max_eig(self) -> float:
        return float(self.eigenvalues[-1])


def sym_eig(S, tol: float = DEFAULT_SYM_TOL) -> SpectralResult:
    S = check_symmetric(S, tol)
    w, V = np.linalg.eigh(symmetrize(S))
    return SpectralResult(w, V)


def cholesky_spd(S, tol: float = DEFAULT_PIVOT_TOL) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive-definite matrix.

    The pivot test is scale free: pivot ``k`` must exceed ``tol * S[k, k]``,
    so graded matrices such as small-time Gramians are not rejected just
    because their entries are tiny.
    """
    S = symmetrize(check_symmetric(S))
    diag = np.diag(S)
    if np.any(diag <= 0):
        raise NotPositiveDefiniteError("non-positive diagonal entry")
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from exc
    pivots = np.diag(L) ** 2
    if np.any(pivots < tol * diag):
        raise NotPositiveDefiniteError("Cholesky pivot below tolerance")
    return L


def spd_inverse(S, tol: float = DEFAULT_PIVOT_TOL) -> np.ndarray:
    """Inverse of an SPD matrix via symmetric diagonal scaling.

    ``S = D H D`` with ``H`` unit-diagonal; only ``H`` is factorized, which
    keeps the relative accuracy of graded matrices (error ~ eps * cond(H)
    instead of eps * cond(S)).
    """
    S = symmetrize(check_symmetric(S))
    diag = np.diag(S)
    if np.any(diag <= 0):
        raise NotPositiveDefiniteError("non-positive diagonal entry")
    d = 1.0 / np.sqrt(diag)
    H = S * d[:, None] * d[None, :]
    L = cholesky_spd(H, tol)
    Linv = scipy.linalg.solve_triangular(L, np.eye(len(L)), lower=True)
    Hinv = Linv.T @ Linv
    return symmetrize(Hinv * d[:, None] * d[None, :])


def spd_min_eig(S, tol: float = DEFAULT_PIVOT_TOL) -> float:
    """Smallest eigenvalue of an SPD matrix as ``1 / lambda_max(S^{-1})``."""
    Sinv = spd_inverse(S, tol)
    return 1.0 / float(np.linalg.eigvalsh(Sinv)[-1])


def numerical_rank(M, tol: float = DEFAULT_RANK_TOL) -> int:
    """Number of singular values above ``tol`` times the largest one."""
    M = as_matrix(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def std_normal_cdf(z):
    return ndtr(z)
