"""Control distances rho^K(x, y) = ||K^{-1/2}(x - y)|| and their Kronecker bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .gramian import _as_linear, _forward_pair, gramian_G, lambda_min
from .linalg import DimensionError, cholesky_spd, spd_inverse, symmetrize
from .model import (KroneckerModel, ModelInputError, Spectrum, ZooId, check_kalman, lift_kronecker,
                    zoo_build)


def control_distance(K, x, y) -> float:
    """sqrt(<x-y, K^{-1}(x-y)>) through a Cholesky solve on the unit-diagonal rescaling of K.

    Raises NotPositiveDefiniteError when K is not SPD.
    """
    K = symmetrize(np.asarray(K, float))
    d = np.asarray(x, float) - np.asarray(y, float)
    if d.shape != (K.shape[0],):
        raise DimensionError("x, y must match the size of K")
    scale = np.sqrt(np.abs(np.diag(K)))
    if np.any(scale == 0):
        cholesky_spd(K)  # raises with the standard message
    L = cholesky_spd(K / np.outer(scale, scale))
    z = scipy.linalg.solve_triangular(L, d / scale, lower=True)
    return float(np.linalg.norm(z))


def rho_t(m, t: float, x, y) -> float:
    """rho_t(x, y), the control distance for the backward Gramian G_t.

    Returns +inf when the Kalman condition fails, since G_t is then singular
    and the distance between distinct points is infinite.
    """
    m = _as_linear(m)
    if t <= 0:
        raise ModelInputError("t must be positive")
    if np.array_equal(np.asarray(x, float), np.asarray(y, float)):
        return 0.0
    if not check_kalman(m):
        return math.inf
    return control_distance(gramian_G(m, 0.0, t), x, y)


def mean_shift_distance(m, t: float, x, y) -> float:
    """Delta = ||Sigma_t^{-1/2} e^{tA}(x - y)||, the Mahalanobis gap of the two transition laws."""
    m = _as_linear(m)
    sigma_t, F = _forward_pair(m.A, m.Q, t)
    d = F @ (np.asarray(x, float) - np.asarray(y, float))
    return float(math.sqrt(max(0.0, d @ spd_inverse(sigma_t) @ d)))


def _blocks(v, j: int) -> np.ndarray:
    v = np.asarray(v, float)
    if v.ndim != 1 or v.size % j:
        raise DimensionError(f"vector of length {v.size} does not split into {j} blocks")
    return v.reshape(j, -1)


def cameron_martin_sq(km: KroneckerModel, v) -> float:
    """sum_l <Q^{-1} v_l, v_l> over the j blocks of a k-mode vector."""
    B = _blocks(v, km.j)
    alphas = km.spectrum.alphas(B.shape[1])
    return float(np.sum(B ** 2 / alphas[None, :]))


def rho_tensor_bound(km: KroneckerModel, k: int, t: float, x, y) -> tuple:
    """(rho_t on the k-mode lift, sqrt(sum_l <Q^{-1}(x_l - y_l), x_l - y_l> / lambda_bar(j, t)))."""
    d = np.asarray(x, float) - np.asarray(y, float)
    if d.size != km.j * k:
        raise DimensionError(f"expected vectors of length {km.j * k}")
    exact = rho_t(lift_kronecker(km, k), t, x, y)
    if not np.any(d):
        return 0.0, 0.0
    bound = math.sqrt(cameron_martin_sq(km, d) / lambda_min(km, t))
    return exact, bound


def rho_kronecker(km: KroneckerModel, k: int, t: float, x, y) -> float:
    """rho^{G_bar_t (x) I}((I (x) Q^{-1/2})x, (I (x) Q^{-1/2})y), computed with j x j algebra."""
    d = _blocks(np.asarray(x, float) - np.asarray(y, float), km.j)
    if d.shape[1] != k:
        raise DimensionError(f"expected {k} modes per block")
    w = d / np.sqrt(km.spectrum.alphas(k))[None, :]
    G_bar = gramian_G(km, 0.0, t)
    total = 0.0
    for col in w.T:  # modes decouple
        total += control_distance(G_bar, col, np.zeros(km.j)) ** 2
    return math.sqrt(total)


@dataclass(frozen=True)
class Dilation:
    kind: str  # "kolmogorov" or "iterated"
    j: int
    a: float

    def __post_init__(self):
        if self.kind not in ("kolmogorov", "iterated"):
            raise ModelInputError(f"unknown dilation kind {self.kind!r}")
        if self.kind == "kolmogorov" and self.j != 2:
            raise ModelInputError("kolmogorov dilation acts on two blocks")
        if not self.a > 0:
            raise ModelInputError("dilation factor must be positive")


def apply_dilation(d: Dilation, x) -> np.ndarray:
    """Scale block i (1-based) by a^{2i-1}."""
    B = _blocks(x, d.j)
    powers = d.a ** (2.0 * np.arange(1, d.j + 1) - 1.0)
    return (B * powers[:, None]).ravel()


def check_scale_invariance(t: float, x, y, j: int = 2) -> float:
    """|rho_t(x, y) - rho_1(delta x, delta y)| with delta the dilation by t^{-1/2}.

    Uses the (iterated) Kolmogorov chain of length j with unit noise on each mode.
    """
    x = np.asarray(x, float)
    k = x.size // j
    name = "kolmogorov" if j == 2 else "iterated-kolmogorov"
    km = zoo_build(ZooId(name, j=j))
    m = lift_kronecker(km.with_spectrum(Spectrum("explicit", values=(1.0,) * k)), k)
    dil = Dilation("kolmogorov" if j == 2 else "iterated", j, t ** -0.5)
    lhs = rho_t(m, t, x, y)
    rhs = rho_t(m, 1.0, apply_dilation(dil, x), apply_dilation(dil, y))
    return abs(lhs - rhs)

