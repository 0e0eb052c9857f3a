"""Covariance Sigma_t, the backward Gramians G(s,t), G_2(s,t) and their spectra.

All integrals are evaluated with block-triangular matrix exponentials
(Van Loan's construction) on a short step, then propagated to the requested
horizon by exact doubling recurrences, so long horizons cost a handful of
matrix products and never an ODE solve.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import (NotPositiveDefiniteError, cholesky_spd, expm, spd_inverse,
                     symmetrize)
from .model import KroneckerModel, LinearModel, check_kalman


class TimeRangeError(ValueError):
    pass


def _as_linear(m) -> LinearModel:
    return m.underlying if isinstance(m, KroneckerModel) else m


def _step_count(A: np.ndarray, t: float) -> int:
    """Doublings needed so the base step has ||A|| h <= 1/2."""
    size = np.linalg.norm(A, 1) * t
    if size <= 0.5:
        return 0
    return int(math.ceil(math.log2(size / 0.5)))


def cov_sigma(m, t: float) -> np.ndarray:
    """Sigma_t = int_0^t e^{uA} Q e^{uA^T} du, the covariance of x_t."""
    m = _as_linear(m)
    if t < 0:
        raise TimeRangeError("t must be nonnegative")
    n = m.n
    if t == 0:
        return np.zeros((n, n))
    sigma_t, _ = _forward_pair(m.A, m.Q, t)
    return sigma_t


def _forward_pair(A, Q, t):
    n = len(A)
    steps = _step_count(A, t)
    h = t / 2 ** steps
    M = np.block([[A, Q], [np.zeros((n, n)), -A.T]]) * h
    E = expm(M)
    F = E[:n, :n]  # e^{hA}
    S = E[:n, n:] @ F.T
    for _ in range(steps):
        S = S + F @ S @ F.T
        F = F @ F
    return symmetrize(S), F


def _forward_triple(A, Q, t):
    """(Sigma_t, M_t, e^{tA}) with M_t = int_0^t (t-u) e^{uA} Q e^{uA^T} du = e^{tA} G2_t e^{tA^T}."""
    n = len(A)
    steps = _step_count(A, t)
    h = t / 2 ** steps
    Z = np.zeros((n, n))
    E = expm(np.block([[A, np.eye(n), Z], [Z, A, Q], [Z, Z, -A.T]]) * h)
    F = E[:n, :n]
    S = E[n:2 * n, 2 * n:] @ F.T
    M = h * S - E[:n, 2 * n:] @ F.T  # h Sigma_h - int_0^h u e^{uA} Q e^{uA^T} du
    tau = h
    for _ in range(steps):
        M = M + tau * S + F @ M @ F.T
        S = S + F @ S @ F.T
        F = F @ F
        tau *= 2
    return symmetrize(S), symmetrize(M), F


def _backward_triple(A, Q, t):
    """(e^{-tA}, G_t, G2_t) with G_t = int_0^t e^{-uA} Q e^{-uA^T} du and
    G2_t = int_0^t u e^{-uA} Q e^{-uA^T} du."""
    n = len(A)
    steps = _step_count(A, t)
    h = t / 2 ** steps
    Z = np.zeros((n, n))
    M = np.block([[-A, np.eye(n), Z], [Z, -A, Q], [Z, Z, A.T]]) * h
    E = expm(M)
    B = E[:n, :n]  # e^{-hA}
    G = E[n:2 * n, 2 * n:] @ B.T
    G2 = E[:n, 2 * n:] @ B.T
    tau = h
    for _ in range(steps):
        G2 = G2 + B @ (G2 + tau * G) @ B.T
        G = G + B @ G @ B.T
        B = B @ B
        tau *= 2
    return B, symmetrize(G), symmetrize(G2)


def _check_times(s, t):
    if s < 0 or t < s:
        raise TimeRangeError(f"need 0 <= s <= t, got s={s}, t={t}")


def gramian_G(m, s: float, t: float) -> np.ndarray:
    """G(s,t) = int_s^t e^{(s-v)A} Q e^{(s-v)A^T} dv, which equals G_{t-s}."""
    _check_times(s, t)
    m = _as_linear(m)
    if t == s:
        return np.zeros((m.n, m.n))
    return _backward_triple(m.A, m.Q, t - s)[1]


def gramian_G2(m, s: float, t: float) -> np.ndarray:
    """G_2(s,t) = int_s^t e^{(s-v)A} G(v,t) e^{(s-v)A^T} dv."""
    _check_times(s, t)
    m = _as_linear(m)
    if t == s:
        return np.zeros((m.n, m.n))
    return _backward_triple(m.A, m.Q, t - s)[2]


def lambda_min(m, t: float) -> float:
    """Smallest eigenvalue of G_t (of the underlying G_t for a KroneckerModel).

    Evaluated as 1 / lambda_max(e^{tA^T} Sigma_t^{-1} e^{tA}), i.e. through the
    forward covariance, which stays finite for strongly damped drifts where
    G_t itself grows exponentially.
    """
    m = _as_linear(m)
    if t <= 0:
        raise TimeRangeError("t must be positive")
    sigma_t, F = _forward_pair(m.A, m.Q, t)
    try:
        inv = spd_inverse(sigma_t)
    except NotPositiveDefiniteError:
        warnings.warn("G_t is singular (Kalman condition fails); returning 0", RuntimeWarning)
        return 0.0
    precision = symmetrize(F.T @ inv @ F)
    top = float(np.linalg.eigvalsh(precision)[-1])
    return 1.0 / top if top > 0 else math.inf


def lambda2_min(m, t: float) -> float:
    """Smallest eigenvalue of G_2(0,t), via 1 / lambda_max(e^{tA^T} M_t^{-1} e^{tA})."""
    m = _as_linear(m)
    if t <= 0:
        raise TimeRangeError("t must be positive")
    _, M, F = _forward_triple(m.A, m.Q, t)
    try:
        inv = spd_inverse(M)
    except NotPositiveDefiniteError:
        return float(np.linalg.eigvalsh(gramian_G2(m, 0.0, t))[0])
    top = float(np.linalg.eigvalsh(symmetrize(F.T @ inv @ F))[-1])
    return 1.0 / top if top > 0 else math.inf


@dataclass(frozen=True, eq=False)
class GramianBundle:
    t: float
    G: np.ndarray
    Sigma: np.ndarray
    lambda_min: float
    G2: Optional[np.ndarray] = None
    lambda2_min: Optional[float] = None

    @property
    def condition(self) -> float:
        top = float(np.linalg.eigvalsh(self.G)[-1])
        return top / self.lambda_min if self.lambda_min > 0 else math.inf


def gramian_bundle(m, t: float, with_g2: bool = True) -> GramianBundle:
    m = _as_linear(m)
    _, G, G2 = _backward_triple(m.A, m.Q, t)
    return GramianBundle(
        t=t, G=G, Sigma=cov_sigma(m, t), lambda_min=lambda_min(m, t),
        G2=G2 if with_g2 else None, lambda2_min=lambda2_min(m, t) if with_g2 else None,
    )


def is_psd(S, tol: float = 1e-12) -> bool:
    """Cholesky-with-tolerance test on S + tol * scale * I."""
    S = symmetrize(np.asarray(S, float))
    scale = max(1.0, float(np.max(np.abs(np.diag(S)))))
    try:
        cholesky_spd(S + tol * scale * np.eye(len(S)), tol=0.0)
        return True
    except NotPositiveDefiniteError:
        return False


def _relative(diff, reference):
    return float(np.linalg.norm(diff, 2) / max(1.0, np.linalg.norm(reference, 2)))


def check_backward_ode(m, s: float, t: float, h: float = 1e-4) -> float:
    """Residual of d/ds G(s,t) = -Q + A G + G A^T with a central difference.

    The residual is measured relative to max(1, ||d/ds G||); the truncation
    error is (h^2/6)||d^3 G/ds^3||, which tracks the size of the derivative
    itself for strongly damped drifts.
    """
    m = _as_linear(m)
    if not (0 <= s - h and s + h <= t):
        raise TimeRangeError("s +- h must stay inside [0, t]")
    dG = (gramian_G(m, s + h, t) - gramian_G(m, s - h, t)) / (2 * h)
    G = gramian_G(m, s, t)
    rhs = -m.Q + m.A @ G + G @ m.A.T
    return _relative(dG - rhs, rhs)


def check_backward_ode_g2(m, s: float, t: float, h: float = 1e-4) -> float:
    """Same as check_backward_ode for d/ds G_2(s,t) = -G(s,t) + A G_2 + G_2 A^T."""
    m = _as_linear(m)
    if not (0 <= s - h and s + h <= t):
        raise TimeRangeError("s +- h must stay inside [0, t]")
    dG2 = (gramian_G2(m, s + h, t) - gramian_G2(m, s - h, t)) / (2 * h)
    G2 = gramian_G2(m, s, t)
    rhs = -gramian_G(m, s, t) + m.A @ G2 + G2 @ m.A.T
    return _relative(dG2 - rhs, rhs)


def check_g2_bound(m, s: float, t: float, tol: float = 1e-9) -> tuple:
    """The chain lambda(t) >= lambda_2(t)/t >= (lambda(t-s)/t) inf_|x|=1 int_0^s |e^{-vA^T}x|^2 dv.

    Returns the three quantities and whether both links hold to ``tol``
    (relative to lambda(t)).
    """
    m = _as_linear(m)
    if not 0 < s < t:
        raise TimeRangeError("need 0 < s < t")
    first = lambda_min(m, t)
    second = lambda2_min(m, t) / t
    # inf_x int_0^s |e^{-vA^T}x|^2 dv is lambda_min of the Gramian with unit noise
    unit = LinearModel(m.A, np.eye(m.n))
    third = lambda_min(m, t - s) / t * lambda_min(unit, s)
    slack = tol * max(1.0, abs(first))
    holds = first >= second - slack and second >= third - slack
    return first, second, third, holds


def gramian_table(m, times) -> list:
    """Rows (t, lambda_min, lambda2_min, cond(G_t)) for the CLI."""
    rows = []
    for t in times:
        b = gramian_bundle(m, float(t))
        rows.append((float(t), b.lambda_min, b.lambda2_min, b.condition))
    return rows


def kalman_consistent(m, times=(0.1, 1.0)) -> bool:
    """True when the Kalman verdict agrees with Cholesky success on G_t."""
    m = _as_linear(m)
    ok = check_kalman(m)
    for t in times:
        try:
            cholesky_spd(gramian_G(m, 0.0, t), tol=1e-10)
            chol = True
        except NotPositiveDefiniteError:
            chol = False
        if chol != ok:
            return False
    return True
