"""Eigenvalue bounds for the example chains: kinetic Fokker-Planck, coupled and damped oscillators."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .gramian import lambda_min
from .inequalities import make_report
from .model import ZooId, tridiagonal, unit_entry, zoo_build
from .semigroup import ClosedForm

KFP_LARGE_GRID = (2.5, 5.0, 10.0, 50.0, 100.0, 200.0)
KFP_SMALL_GRID = (0.001, 0.01, 0.1, 0.5, 1.0, 1.5)
T_STAR_GRID = (1.0, 2.0, 3.0, 4.0, 5.0)


class RangeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# kinetic Fokker-Planck


def kfp_eigen(gamma: float) -> tuple:
    """Eigenvalues (-gamma +- sqrt(gamma^2 - 4))/2 of the kinetic Fokker-Planck drift."""
    if not gamma > 0:
        raise RangeError("gamma must be positive")
    if gamma == 2:
        raise RangeError("gamma = 2 gives a repeated eigenvalue")
    root = cmath.sqrt(gamma * gamma - 4)
    lam1, lam2 = (-gamma + root) / 2, (-gamma - root) / 2
    if gamma > 2:
        return lam1.real, lam2.real
    return lam1, lam2


def kfp_lambda_bound(gamma: float, t_star: float, regime: str):
    """lambda_bar(2, t) >= e^{t*}/16 at t = t* gamma (large friction) or t* / gamma (small)."""
    if t_star < 1:
        raise RangeError("t* must be at least 1")
    if regime not in ("large", "small"):
        raise RangeError("regime is 'large' or 'small'")
    t = t_star * gamma if regime == "large" else t_star / gamma
    km = zoo_build(ZooId("kinetic-fp", gamma=gamma))
    lhs = lambda_min(km, t)
    rhs = math.exp(t_star) / 16
    # the bound is a lower bound on lambda_bar: report slack = lambda_bar - bound
    inst = {"model": km.name, "gamma": gamma, "t_star": t_star, "regime": regime, "t": t}
    return make_report("kfpLambdaBound", inst, rhs, lhs, ClosedForm(), 0.0, 0.0,
                       note="lhs = e^{t*}/16, rhs = lambda_bar(2, t)")


def kfp_threshold_scan(regime: str, gammas=None, t_stars=T_STAR_GRID) -> dict:
    """Empirical friction threshold on a grid.

    large: smallest gamma such that it and every larger grid value pass for all t*.
    small: largest gamma such that it and every smaller grid value pass for all t*.
    """
    if gammas is None:
        gammas = KFP_LARGE_GRID if regime == "large" else KFP_SMALL_GRID
    gammas = sorted(gammas)
    holds = {g: all(kfp_lambda_bound(g, ts, regime).verdict == "pass" for ts in t_stars) for g in gammas}
    threshold = None
    ordered = gammas[::-1] if regime == "large" else gammas
    for g in ordered:
        if not holds[g]:
            break
        threshold = g
    return {"regime": regime, "grid": list(gammas), "t_star_grid": list(t_stars),
            "holds": {str(g): holds[g] for g in gammas}, "threshold": threshold}


# ---------------------------------------------------------------------------
# coupled oscillators


def coupled_osc_constant(j: int) -> float:
    """c_j = (j+1) / (pi sin(pi/(j+1)))."""
    return (j + 1) / (math.pi * math.sin(math.pi / (j + 1)))


def coupled_osc_bound(j: int, t: float, corrected: bool = False):
    """lambda_bar(j, t) >= t sin^2(pi/(j+1)) - c_j.

    With ``corrected=True`` the leading coefficient carries the squared first
    eigenvector component 2/(j+1), which the uncorrected form omits:
    lambda_bar(j, t) >= (2t/(j+1)) sin^2(pi/(j+1)) - c_j.
    """
    if j < 2 or t <= 0:
        raise RangeError("need j >= 2 and t > 0")
    km = zoo_build(ZooId("coupled-osc", j=j))
    lam = lambda_min(km, t)
    lead = t * math.sin(math.pi / (j + 1)) ** 2
    if corrected:
        lead *= 2.0 / (j + 1)
    bound = lead - coupled_osc_constant(j)
    note = "vacuous: bound is negative" if bound <= 0 else ""
    inst = {"model": km.name, "j": j, "t": t, "corrected": corrected}
    return make_report("coupledOscBound", inst, bound, lam, ClosedForm(), 0.0, 1e-12, note=note)


@dataclass
class OscillatorSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns
    residuals: np.ndarray
    norms_sq: np.ndarray


def coupled_osc_spectrum(j: int) -> OscillatorSpectrum:
    """Eigenpairs 2i cos(l pi/(j+1)) with vectors ((-i)^m sin(l m pi/(j+1)))_m."""
    if j < 2:
        raise RangeError("need j >= 2")
    A = tridiagonal(j, 1, 0, -1)
    ell = np.arange(1, j + 1)
    lam = 2j * np.cos(ell * np.pi / (j + 1))
    m = np.arange(1, j + 1)[:, None]
    V = (-1j) ** m * np.sin(m * ell[None, :] * np.pi / (j + 1))
    res = np.linalg.norm(A @ V - V * lam[None, :], axis=0)
    return OscillatorSpectrum(lam, V, res, np.sum(np.abs(V) ** 2, axis=0))


# ---------------------------------------------------------------------------
# damped oscillators


@dataclass(frozen=True)
class LyapunovConstants:
    j: int
    b: tuple  # b_2 .. b_{j+1}
    beta: float
    a0: float
    a: tuple  # a_1 .. a_j
    rj: float
    cj: float
    kappa: float  # b_j - b_{j+1}/2 - b_{j-1}/2

    def b_at(self, i: int) -> float:
        return self.b[i - 2]

    @property
    def b_sum(self) -> float:
        """sum_{i=2}^{j} b_i."""
        return math.fsum(self.b[: self.j - 1])


def damped_osc_constants(j: int) -> LyapunovConstants:
    if j < 3:
        raise RangeError("damped oscillator constants need j >= 3")
    b = tuple(math.log(i + 1) for i in range(2, j + 2))

    def bb(i):
        return b[i - 2]

    beta = math.log(2)
    a = tuple(math.fsum(bb(i) for i in range(l + 1, j + 1)) for l in range(1, j + 1))
    a1 = a[0]
    a0 = a1 + a1 ** 2 / (2 * beta) + bb(2) + bb(j) - bb(j + 1) / 2 - bb(j - 1) / 2
    kappa = bb(j) - bb(j + 1) / 2 - bb(j - 1) / 2
    bsum = math.fsum(b[: j - 1])
    rj = kappa / (a0 + 2 * bsum)
    cj = (a0 / 2 - bsum) / (a0 / 2 + bsum)
    consts = LyapunovConstants(j, b, beta, a0, a, rj, cj, kappa)
    if not (a0 > 2 * bsum and rj > 0 and 0 < cj < 1 and a[-1] == 0):
        raise ArithmeticError(f"Lyapunov constants violate their invariants at j={j}")
    return consts


def damped_flow_matrix(j: int) -> np.ndarray:
    """B = Tri_j(1,0,-1) + E_11, so that y(v) = e^{-vA_bar^T} x solves y' = B y."""
    return tridiagonal(j, 1, 0, -1) + unit_entry(j)


def lyapunov_matrix(c: LyapunovConstants) -> np.ndarray:
    """Symmetric P with V(y) = y^T P y = (a0/2)|y|^2 - sum_i a_i y_i y_{i+1}."""
    P = np.eye(c.j) * c.a0 / 2
    for i in range(c.j - 1):
        P[i, i + 1] = P[i + 1, i] = -c.a[i] / 2
    return P


def lyapunov_V(c: LyapunovConstants, y) -> np.ndarray:
    y = np.atleast_2d(y)
    return np.einsum("ij,jk,ik->i", y, lyapunov_matrix(c), y)


def lyapunov_dV(c: LyapunovConstants, y) -> np.ndarray:
    """d/dv V(y(v)) along y' = B y."""
    y = np.atleast_2d(y)
    P = lyapunov_matrix(c)
    B = damped_flow_matrix(c.j)
    return np.einsum("ij,jk,ik->i", y, P @ B + B.T @ P, y)


@dataclass
class DecayTrace:
    times: np.ndarray
    sq_norms: np.ndarray
    bound: np.ndarray
    report: object


def damped_osc_decay(j: int, t_max: float, x0, n_grid: int = 201, rtol: float = 1e-10) -> DecayTrace:
    """Integrate y' = B y and check |y(t)|^2 >= c_j e^{r_j t} |x0|^2 on a grid."""
    c = damped_osc_constants(j)
    x0 = np.asarray(x0, float)
    B = damped_flow_matrix(j)
    times = np.linspace(0.0, t_max, n_grid)
    if not np.any(x0):
        sq = np.zeros_like(times)
    else:
        sol = solve_ivp(lambda _, y: B @ y, (0.0, t_max), x0, method="DOP853", t_eval=times,
                        rtol=rtol, atol=1e-14 * np.linalg.norm(x0))
        if not sol.success:
            raise ArithmeticError(f"integration failed: {sol.message}")
        sq = np.sum(sol.y ** 2, axis=0)
    bound = c.cj * np.exp(c.rj * times) * float(x0 @ x0)
    # worst relative margin over the grid
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, sq / bound, np.inf)
    k = int(np.argmin(ratio))
    inst = {"j": j, "t_max": t_max, "x0": x0.tolist(), "worst_t": float(times[k])}
    report = make_report("dampedOscDecay", inst, float(bound[k]), float(sq[k]), ClosedForm(), 0.0,
                         rtol * max(1.0, float(bound[k])),
                         note="vacuous: x0 = 0" if not np.any(x0) else "",
                         extras={"min_ratio": float(ratio[k])})
    return DecayTrace(times, sq, bound, report)


def damped_osc_lambda_bound(j: int, t: float):
    """lambda_bar(j,t) >= lambda_bar(j,t/2) (c_j/(t r_j)) (e^{r_j t/2} - 1), for t >= 2.

    The weaker form with lambda_bar(j,1) in place of lambda_bar(j,t/2) is
    reported in ``extras``.
    """
    if t < 2:
        raise RangeError("the bound is stated for t >= 2")
    c = damped_osc_constants(j)
    km = zoo_build(ZooId("damped-osc", j=j))
    lam_t = lambda_min(km, t)
    growth = c.cj / (t * c.rj) * math.expm1(c.rj * t / 2)
    rhs = lambda_min(km, t / 2) * growth
    weak = lambda_min(km, 1.0) * growth
    inst = {"model": km.name, "j": j, "t": t}
    return make_report("dampedOscLambdaBound", inst, rhs, lam_t, ClosedForm(), 0.0,
                       1e-12 * max(1.0, lam_t), note="lhs = bound, rhs = lambda_bar(j, t)",
                       extras={"weak_bound": weak, "weak_holds": lam_t >= weak})


def damped_osc_time_bound(j: int, target: float) -> float:
    """Smallest t >= 2 at which lambda_bar(j,1)(c_j/(t r_j))(e^{r_j t/2} - 1) reaches ``target``.

    Any root t_k of lambda_bar(j, t) = target is at most this value.
    """
    c = damped_osc_constants(j)
    lam1 = lambda_min(zoo_build(ZooId("damped-osc", j=j)), 1.0)

    def gap(t):
        return math.log(lam1 * c.cj / (t * c.rj)) + math.log(math.expm1(c.rj * t / 2)) - math.log(target)

    if gap(2.0) >= 0:
        return 2.0
    hi = 4.0
    while gap(hi) < 0:
        hi *= 2
    return brentq(gap, hi / 2, hi, xtol=1e-12, rtol=1e-14)
