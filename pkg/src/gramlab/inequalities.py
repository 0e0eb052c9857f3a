"""Instance-level verification of the semigroup inequalities for linear diffusions.

Every check returns an :class:`InequalityReport`. Closed forms are used where
the Gaussian structure provides them; otherwise Gauss-Hermite quadrature or
Monte Carlo with batch-means standard errors.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.special import erf

from .distance import mean_shift_distance, rho_t
from .gramian import _as_linear, gramian_G
from .linalg import expm
from .semigroup import (ClosedForm, GaussHermite, GaussianLaw, MethodError, MonteCarlo, TestFunction,
                        expect, expect_grad, push_forward)

INEQUALITY_IDS = ("reversePoincare", "reverseLogSobolev", "wangHarnack", "totalVariation",
                  "hellingerWasserstein", "integratedHarnack")
DEFAULT_ABS_TOL = 1e-10
MC_BATCHES = 50
PASS_SIGMAS = 3.0
INCONCLUSIVE_SIGMAS = 5.0


def classify(slack: float, stat_error: float, statistical: bool, abs_tol: float = DEFAULT_ABS_TOL,
             rel_tol: float = 0.0, scale: float = 0.0) -> str:
    """Verdict for one instance.

    pass          slack >= -max(abs_tol, rel_tol*scale, 3*stat_error)
    inconclusive  statistical, and the shortfall lies within 5 standard errors
    fail          otherwise
    """
    band = max(abs_tol, rel_tol * abs(scale), PASS_SIGMAS * stat_error)
    if not math.isfinite(slack):
        return "pass" if slack == math.inf else "fail"
    if slack >= -band:
        return "pass"
    if statistical and stat_error > 0 and slack >= -INCONCLUSIVE_SIGMAS * stat_error:
        return "inconclusive"
    return "fail"


@dataclass
class InequalityReport:
    inequality_id: str
    instance: dict
    lhs: float
    rhs: float
    slack: float
    method: str
    stat_error: float
    verdict: str
    note: str = ""
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def make_report(ineq: str, instance: dict, lhs: float, rhs: float, method, stat_error: float = 0.0,
                abs_tol: float = DEFAULT_ABS_TOL, rel_tol: float = 0.0, note: str = "",
                extras: dict | None = None) -> InequalityReport:
    slack = rhs - lhs
    if math.isinf(rhs) and rhs > 0 and math.isfinite(lhs):
        slack = math.inf
    statistical = getattr(method, "statistical", False)
    verdict = classify(slack, stat_error, statistical, abs_tol, rel_tol, rhs)
    return InequalityReport(ineq, instance, float(lhs), float(rhs), float(slack), method.name,
                            float(stat_error), verdict, note, extras or {})


def _instance(m, t, **kw) -> dict:
    out = {"model": _as_linear(m).name, "t": float(t)}
    for key, val in kw.items():
        if isinstance(val, TestFunction):
            val = val.describe()
        elif isinstance(val, np.ndarray):
            val = val.tolist()
        out[key] = val
    return out


def _batched(stat, Z: np.ndarray, batches: int = MC_BATCHES):
    """Apply ``stat`` (returning (lhs, rhs)) to all of Z and to batches of Z.

    Returns (lhs, rhs, standard error of rhs - lhs from batch means).
    """
    lhs, rhs = stat(Z)
    slacks = []
    for chunk in np.array_split(Z, batches):
        b_lhs, b_rhs = stat(chunk)
        slacks.append(b_rhs - b_lhs)
    se = float(np.std(slacks, ddof=1) / math.sqrt(batches))
    return float(lhs), float(rhs), se


def _normals(method: MonteCarlo, n: int) -> np.ndarray:
    return method.stream.generator().standard_normal((method.count, n))


def _factor(law: GaussianLaw) -> np.ndarray:
    return law.cholesky()


# ---------------------------------------------------------------------------
# gradient bounds


def reverse_poincare(m, t: float, x, f: TestFunction, method=ClosedForm(),
                     abs_tol: float = DEFAULT_ABS_TOL) -> InequalityReport:
    """<G_t grad P_t f, grad P_t f>(x) <= P_t f^2(x) - (P_t f(x))^2."""
    m = _as_linear(m)
    law = push_forward(m, t, x)
    G = gramian_G(m, 0.0, t)
    FT = expm(t * m.A).T
    inst = _instance(m, t, x=np.asarray(x, float), f=f)

    if isinstance(method, MonteCarlo):
        L = _factor(law)

        def stat(Z):
            Y = law.mean + Z @ L.T
            vals = f(Y)
            g = FT @ f.grad(Y).mean(axis=0)
            return g @ G @ g, vals.var()

        lhs, rhs, se = _batched(stat, _normals(method, m.n))
        return make_report("reversePoincare", inst, lhs, rhs, method, se, abs_tol)

    g = FT @ expect_grad(law, f, method).value
    lhs = float(g @ G @ g)
    first = expect(law, f, method)
    second = expect(law, f.power(2), method)
    rhs = second.value - first.value ** 2
    err = float(second.error + 2 * abs(first.value) * first.error)
    return make_report("reversePoincare", inst, lhs, rhs, method, 0.0, max(abs_tol, 3 * err))


def _require_nonnegative(f: TestFunction):
    if not f.nonnegative:
        raise ValueError(f"{f.kind} may take negative values; a nonnegative function is required")


def reverse_log_sobolev(m, t: float, x, f: TestFunction, method=ClosedForm(),
                        abs_tol: float = DEFAULT_ABS_TOL) -> InequalityReport:
    """Gamma^{G_t}(P_t f)/P_t f <= 2 P_t(f log f) - 2 P_t f log P_t f."""
    _require_nonnegative(f)
    m = _as_linear(m)
    law = push_forward(m, t, x)
    G = gramian_G(m, 0.0, t)
    FT = expm(t * m.A).T
    inst = _instance(m, t, x=np.asarray(x, float), f=f)

    def xlogx(v):
        return v * math.log(v) if v > 0 else 0.0

    if isinstance(method, MonteCarlo):
        L = _factor(law)
        flog = f.xlogx()

        def stat(Z):
            Y = law.mean + Z @ L.T
            pt = f(Y).mean()
            g = FT @ f.grad(Y).mean(axis=0)
            return g @ G @ g / pt, 2 * flog(Y).mean() - 2 * xlogx(pt)

        lhs, rhs, se = _batched(stat, _normals(method, m.n))
        return make_report("reverseLogSobolev", inst, lhs, rhs, method, se, abs_tol)

    pt = expect(law, f, method).value
    if pt <= 0:
        return make_report("reverseLogSobolev", inst, 0.0, 0.0, method, 0.0, abs_tol,
                           note="P_t f vanishes; both sides are zero")
    g = FT @ expect_grad(law, f, method).value
    lhs = float(g @ G @ g) / pt
    ent = expect(law, f.xlogx(), method)
    rhs = 2 * ent.value - 2 * xlogx(pt)
    return make_report("reverseLogSobolev", inst, lhs, rhs, method, 0.0,
                       max(abs_tol, 1e-12 * abs(rhs), 3 * 2 * float(ent.error)))


def wang_harnack(m, t: float, alpha: float, x, y, f: TestFunction, method=ClosedForm(),
                 abs_tol: float = DEFAULT_ABS_TOL) -> InequalityReport:
    """(P_t f(x))^alpha <= P_t f^alpha(y) exp(alpha rho_t(x,y)^2 / (2(alpha-1)))."""
    if not alpha > 1:
        raise ValueError("alpha must exceed 1")
    _require_nonnegative(f)
    m = _as_linear(m)
    rho = rho_t(m, t, x, y)
    exponent = alpha * rho ** 2 / (2 * (alpha - 1))
    factor = math.exp(exponent) if exponent < 700 else math.inf
    law_x, law_y = push_forward(m, t, x), push_forward(m, t, y)
    inst = _instance(m, t, alpha=alpha, x=np.asarray(x, float), y=np.asarray(y, float), f=f)
    extras = {"rho": rho, "exponent": exponent}

    if isinstance(method, MonteCarlo):
        L = _factor(law_x)  # same covariance for both starting points
        f_alpha = f.power(alpha)

        def stat(Z):
            W = Z @ L.T
            return f(law_x.mean + W).mean() ** alpha, f_alpha(law_y.mean + W).mean() * factor

        lhs, rhs, se = _batched(stat, _normals(method, m.n))
        return make_report("wangHarnack", inst, lhs, rhs, method, se, abs_tol, extras=extras)

    px = expect(law_x, f, method)
    py = expect(law_y, f.power(alpha), method)
    lhs = px.value ** alpha
    rhs = py.value * factor
    err = alpha * px.value ** (alpha - 1) * px.error + (py.error * factor if py.error else 0.0)
    return make_report("wangHarnack", inst, lhs, rhs, method, 0.0,
                       max(abs_tol, 1e-12 * abs(rhs), 3 * float(err)), extras=extras)


# ---------------------------------------------------------------------------
# distances between transition laws


def total_variation(m, t: float, x, y, abs_tol: float = DEFAULT_ABS_TOL) -> InequalityReport:
    """TV(P_t(x,.), P_t(y,.)) = 2 Phi(Delta/2) - 1 <= rho_t(x, y)."""
    delta = mean_shift_distance(m, t, x, y)
    lhs = float(erf(delta / (2 * math.sqrt(2))))
    rhs = rho_t(m, t, x, y)
    inst = _instance(m, t, x=np.asarray(x, float), y=np.asarray(y, float))
    return make_report("totalVariation", inst, lhs, rhs, ClosedForm(), 0.0, abs_tol,
                       extras={"delta": delta})


def hellinger_wasserstein(m, t: float, x, y, abs_tol: float = DEFAULT_ABS_TOL) -> InequalityReport:
    """He_2(delta_x P_t, delta_y P_t)^2 = 2(1 - exp(-Delta^2/8)) <= rho_t(x, y)^2 / 4."""
    delta = mean_shift_distance(m, t, x, y)
    lhs = float(-2 * math.expm1(-delta ** 2 / 8))
    rho = rho_t(m, t, x, y)
    inst = _instance(m, t, x=np.asarray(x, float), y=np.asarray(y, float))
    return make_report("hellingerWasserstein", inst, lhs, rho ** 2 / 4, ClosedForm(), 0.0, abs_tol,
                       extras={"delta": delta, "rho": rho})


def integrated_harnack(m, t: float, p: float, x, y, method=ClosedForm(),
                       abs_tol: float = DEFAULT_ABS_TOL, rel_tol: float = 1e-8) -> InequalityReport:
    """int (p_t(x,z)/p_t(y,z))^{1/(p-1)} p_t(x,z) dz <= exp(p rho_t^2 / (2 (p-1)^2))."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    m = _as_linear(m)
    q = 1.0 / (p - 1)
    rho = rho_t(m, t, x, y)
    rhs = math.exp(p / (p - 1) ** 2 * rho ** 2 / 2)
    inst = _instance(m, t, p=p, x=np.asarray(x, float), y=np.asarray(y, float))
    if isinstance(method, MonteCarlo):
        law_x, law_y = push_forward(m, t, x), push_forward(m, t, y)
        L = _factor(law_x)

        def stat(Z):
            Y = law_x.mean + Z @ L.T
            ratio = np.exp(q * (law_x.logpdf(Y) - law_y.logpdf(Y)))
            return ratio.mean(), rhs

        lhs, _, se = _batched(stat, _normals(method, m.n))
        return make_report("integratedHarnack", inst, lhs, rhs, method, se, abs_tol, rel_tol)
    if isinstance(method, GaussHermite):
        raise MethodError("integrated Harnack supports closed form or Monte Carlo")
    delta = mean_shift_distance(m, t, x, y)
    lhs = math.exp(q * (q + 1) * delta ** 2 / 2)
    return make_report("integratedHarnack", inst, lhs, rhs, method, 0.0, abs_tol, rel_tol,
                       extras={"delta": delta, "rho": rho})


# ---------------------------------------------------------------------------


def with_retry(check, *args, method=None, **kwargs) -> InequalityReport:
    """Run a check; if a Monte Carlo verdict is inconclusive rerun once at 10x samples."""
    report = check(*args, method=method, **kwargs)
    if report.verdict == "inconclusive" and isinstance(method, MonteCarlo):
        bigger = replace(method, count=method.count * 10, stream=method.stream.child(1))
        retried = check(*args, method=bigger, **kwargs)
        retried.note = (retried.note + " retried at 10x samples").strip()
        retried.extras["first_verdict"] = report.verdict
        return retried
    return report
