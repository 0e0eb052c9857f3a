"""Finite-k ingredients of the infinite-dimensional Kronecker system.

A KroneckerModel with noise spectrum alpha_1 >= alpha_2 >= ... is truncated
to its first k modes. This module computes the time t_k at which
lambda_bar(j, t_k) = 1/alpha_k, the growth product t_k * sum_{l>k} alpha_l,
truncation errors, and k-mode instances of the Wang-Harnack and L^p
quasi-invariance bounds.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .distance import cameron_martin_sq, mean_shift_distance, rho_t
from .gramian import cov_sigma, lambda_min
from .inequalities import _batched, _normals, make_report, wang_harnack
from .linalg import expm
from .model import KroneckerModel, ModelInputError, Spectrum, lift_kronecker
from .semigroup import ClosedForm, MonteCarlo, TestFunction, push_forward

T_MAX = 1e6
GROWTH_SLOPE_TOL = 0.05


class UnreachableError(RuntimeError):
    pass


def exact_lambda(km: KroneckerModel) -> Callable[[float], float]:
    return lambda t: lambda_min(km, t)


def kolmogorov_small_time_proxy(t: float) -> float:
    """t^3/12, the small-time branch of lambda_bar(2, t) for the Kolmogorov chain."""
    return t ** 3 / 12.0


def t_k(lam: Callable[[float], float], alpha_k: float, t_max: float = T_MAX, rtol: float = 1e-10) -> float:
    """Root of lam(t) = 1/alpha_k for a nondecreasing lam.

    The upper end of the bracket is found by doubling from t = 1; a root
    beyond ``t_max`` raises UnreachableError.
    """
    target = 1.0 / alpha_k
    lo, hi = 0.0, 1.0
    while lam(hi) < target:
        lo, hi = hi, 2 * hi
        if lo > t_max:
            raise UnreachableError(f"lambda_bar stays below {target:g} up to t = {t_max:g}")
    root = brentq(lambda t: lam(t) - target, lo, hi, xtol=1e-300, rtol=max(rtol, 4.5e-16), maxiter=500)
    if root > t_max:
        raise UnreachableError(f"root {root:g} exceeds t_max = {t_max:g}")
    return root


@dataclass
class GrowthRecord:
    k: int
    alpha_k: float
    t_k: float
    tail: float
    product: float


@dataclass
class GrowthResult:
    records: list
    slope: float
    decreasing: bool
    verdict: str  # "pass" when the product decreases along the grid, else "fail"
    lambda_source: str = "exact"

    def to_dict(self) -> dict:
        return {"records": [asdict(r) for r in self.records], "slope": self.slope,
                "decreasing": self.decreasing, "verdict": self.verdict,
                "lambda_source": self.lambda_source}


def growth_condition(lam: Callable[[float], float], spectrum: Spectrum, k_grid,
                     t_max: float = T_MAX, lambda_source: str = "exact") -> GrowthResult:
    """Tabulate t_k * sum_{l>k} alpha_l and fit its log-log slope in k.

    The condition (product -> 0) is judged on the grid: pass when the product
    is strictly decreasing and the fitted slope is negative.
    """
    k_grid = [int(k) for k in k_grid]
    if not k_grid:
        raise ModelInputError("k grid is empty")
    records = []
    for k in k_grid:
        a = spectrum.alpha(k)
        tk = t_k(lam, a, t_max)
        tail = spectrum.tail(k)
        records.append(GrowthRecord(k, a, tk, tail, tk * tail))
    prods = np.array([r.product for r in records])
    if len(records) > 1:
        slope = float(np.polyfit(np.log(k_grid), np.log(prods), 1)[0])
        decreasing = bool(np.all(np.diff(prods) < 0))
    else:
        slope, decreasing = math.nan, False
    verdict = "pass" if decreasing and slope < 0 else "fail"
    return GrowthResult(records, slope, decreasing, verdict, lambda_source)


def dissipativity_check(km: KroneckerModel, tol: float = 1e-12) -> bool:
    """<A_bar x, x> <= 0 for all x."""
    sym = (km.A_bar + km.A_bar.T) / 2
    return float(np.linalg.eigvalsh(sym)[-1]) <= tol


def truncation_error(km: KroneckerModel, k: int, t: float, X0=None) -> tuple:
    """(E||Delta_k X(t)||_W^2, its dissipative upper bound).

    ``X0`` is a j x K array holding K >= k modes of the initial state (None
    for zero). The exact value is sum_{modes > k} |e^{tA_bar} X0_mode|^2 +
    tail(k) tr Sigma_bar_t; the bound replaces e^{tA_bar} by a contraction and
    tr Sigma_bar_t by t ||sigma_bar||_F^2.
    """
    tail = km.spectrum.tail(k)
    head = head_bound = 0.0
    if X0 is not None:
        X0 = np.asarray(X0, float)
        if X0.ndim != 2 or X0.shape[0] != km.j:
            raise ModelInputError(f"X0 must be a {km.j} x K array of modes")
        rest = X0[:, k:]
        head = float(np.sum((expm(t * km.A_bar) @ rest) ** 2))
        head_bound = float(np.sum(rest ** 2))
    exact = head + tail * float(np.trace(cov_sigma(km, t)))
    bound = head_bound + float(np.sum(km.sigma_bar ** 2)) * t * tail
    return exact, bound


def projected_wang_harnack(km: KroneckerModel, k: int, t: float, alpha: float, X0, Y0,
                           f: TestFunction, method=ClosedForm()):
    """Wang-Harnack on the k-mode lift with the k-uniform exponent
    alpha ||(I (x) Q^{-1/2}) Pi_k (X0 - Y0)||^2 / (2 (alpha - 1) lambda_bar(j, t)).

    ``X0``, ``Y0`` are j x K arrays (K >= k); only the first k modes are used.
    """
    X0, Y0 = np.asarray(X0, float), np.asarray(Y0, float)
    x, y = X0[:, :k].ravel(), Y0[:, :k].ravel()
    m = lift_kronecker(km, k)
    exponent = alpha * cameron_martin_sq(km, x - y) / (2 * (alpha - 1) * lambda_min(km, t))
    base = wang_harnack(m, t, alpha, x, y, f, method)
    rho_exponent = base.extras["exponent"]
    gap = exponent - rho_exponent
    if gap > 700 or not math.isfinite(base.rhs):
        rhs = math.inf
    else:
        rhs = base.rhs * math.exp(gap)
    inst = dict(base.instance, k=k)
    return make_report("projectedWangHarnack", inst, base.lhs, rhs, method, base.stat_error,
                       max(1e-10, 1e-12 * rhs), extras={"exponent": exponent, "rho_exponent": rho_exponent})


def quasi_invariance_lp(km: KroneckerModel, k: int, t: float, p: float, X0, method=ClosedForm()):
    """||d mu_t(X0)/d mu_t||_{L^p(mu_t)} <= exp((1+p) ||X0||_{H_Q}^2 / (2 lambda_bar(j, t))).

    mu_t(X0) is the law at time t started from X0 (a j*k vector), mu_t the
    law started from 0.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    x0 = np.asarray(X0, float).ravel()
    m = lift_kronecker(km, k)
    cm = cameron_martin_sq(km, x0)
    log_rhs = (1 + p) * cm / (2 * lambda_min(km, t))
    rhs = math.exp(log_rhs) if log_rhs < 700 else math.inf
    inst = {"model": m.name, "t": t, "p": p, "k": k, "X0": x0.tolist()}
    zero = np.zeros_like(x0)
    if isinstance(method, MonteCarlo):
        law0, law1 = push_forward(m, t, zero), push_forward(m, t, x0)
        L = law0.cholesky()

        def stat(Z):
            Y = law0.mean + Z @ L.T
            moment = np.exp(p * (law1.logpdf(Y) - law0.logpdf(Y))).mean()
            return moment ** (1 / p), rhs

        lhs, _, se = _batched(stat, _normals(method, m.n))
        return make_report("quasiInvariance", inst, lhs, rhs, method, se)
    rho = rho_t(m, t, x0, zero)
    log_lhs = (p - 1) / 2 * rho ** 2
    lhs = math.exp(log_lhs) if log_lhs < 700 else math.inf
    return make_report("quasiInvariance", inst, lhs, rhs, method, 0.0, max(1e-10, 1e-12 * rhs),
                       extras={"rho": rho, "delta": mean_shift_distance(m, t, x0, zero), "cm_sq": cm,
                               "log_lhs": log_lhs, "log_rhs": log_rhs})


# ---------------------------------------------------------------------------
# study container


@dataclass
class ScalingStudy:
    model: str
    spectrum: dict
    k_grid: list
    growth: Optional[GrowthResult] = None
    truncation: list = field(default_factory=list)  # (k, t_k, exact, bound)

    def rows(self) -> list:
        trunc = {row[0]: row for row in self.truncation}
        out = []
        for r in (self.growth.records if self.growth else []):
            _, _, ex, bd = trunc.get(r.k, (r.k, r.t_k, math.nan, math.nan))
            out.append({"k": r.k, "t_k": r.t_k, "tail": r.tail, "product": r.product,
                        "truncExact": ex, "truncBound": bd})
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, ["k", "t_k", "tail", "product", "truncExact", "truncBound"],
                                lineterminator="\n")
        writer.writeheader()
        for row in self.rows():
            writer.writerow({key: repr(float(v)) if key != "k" else v for key, v in row.items()})
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"model": self.model, "spectrum": self.spectrum, "k_grid": self.k_grid,
               "growth": self.growth.to_dict() if self.growth else None, "rows": self.rows()}
        return json.dumps(doc, indent=2, sort_keys=True)


def run_scaling_study(km: KroneckerModel, k_grid, lam=None, t_max: float = T_MAX,
                      lambda_source: str = "exact") -> ScalingStudy:
    """Growth products and truncation errors at t = t_k along a k grid."""
    lam = lam or exact_lambda(km)
    growth = growth_condition(lam, km.spectrum, k_grid, t_max, lambda_source)
    trunc = []
    for r in growth.records:
        exact, bound = truncation_error(km, r.k, r.t_k)
        trunc.append((r.k, r.t_k, exact, bound))
    return ScalingStudy(km.name, km.spectrum.to_dict(), [int(k) for k in k_grid], growth, trunc)
