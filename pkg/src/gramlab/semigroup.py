"""Gaussian transition laws, exact sampling and P_t f by closed form, quadrature or Monte Carlo.

The law of x_t started at x is N(e^{tA}x, Sigma_t), so every expectation
below is an expectation under an explicit Gaussian and no time stepping is
involved anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import expit, log_ndtr, ndtr

from .gramian import _as_linear, cov_sigma
from .linalg import NotPositiveDefiniteError, cholesky_spd, expm, symmetrize

GH_MAX_DIM = 4
GH_MAX_ORDER = 60


class DegenerateLawError(ValueError):
    pass


class MethodError(ValueError):
    """The requested evaluation method does not apply to this test function."""


# ---------------------------------------------------------------------------
# laws and sampling


@dataclass(frozen=True, eq=False)
class GaussianLaw:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, float).ravel()
        cov = symmetrize(np.atleast_2d(np.asarray(self.cov, float)))
        if cov.shape != (mean.size, mean.size):
            raise ValueError("mean and covariance sizes differ")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n(self) -> int:
        return self.mean.size

    def cholesky(self) -> np.ndarray:
        try:
            return cholesky_spd(self.cov)
        except NotPositiveDefiniteError as exc:
            raise DegenerateLawError("covariance is singular") from exc

    def root(self) -> np.ndarray:
        """A square root R with R R^T = cov that also works for PSD covariances."""
        w, V = np.linalg.eigh(self.cov)
        return V * np.sqrt(np.clip(w, 0.0, None))[None, :]

    def logpdf(self, Y) -> np.ndarray:
        L = self.cholesky()
        Y = np.atleast_2d(np.asarray(Y, float))
        Z = np.linalg.solve(L, (Y - self.mean).T)
        logdet = 2.0 * np.sum(np.log(np.diag(L)))
        return -0.5 * np.sum(Z ** 2, axis=0) - 0.5 * (self.n * math.log(2 * math.pi) + logdet)

    def pdf(self, Y) -> np.ndarray:
        return np.exp(self.logpdf(Y))

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        Z = rng.standard_normal((count, self.n))
        if not np.any(self.cov):
            return np.repeat(self.mean[None, :], count, axis=0)
        return self.mean + Z @ self.cholesky().T


def push_forward(m, t: float, x) -> GaussianLaw:
    """Law of x_t started from x: N(e^{tA}x, Sigma_t)."""
    m = _as_linear(m)
    if t < 0:
        raise ValueError("t must be nonnegative")
    x = np.asarray(x, float)
    return GaussianLaw(expm(t * m.A) @ x, cov_sigma(m, t))


def density(m, t: float, x, y) -> float:
    """Transition density p_t(x, y)."""
    if t <= 0:
        raise ValueError("t must be positive")
    return float(push_forward(m, t, x).pdf(np.asarray(y, float))[0])


@dataclass(frozen=True)
class SampleStream:
    """Counter-based random substream keyed by (root_seed, stream_index).

    Philox with a SeedSequence spawn key gives statistically independent
    streams for distinct keys, independent of how work is scheduled.
    """

    root_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence([int(self.root_seed) & (2 ** 64 - 1), int(self.stream_index)])
        return np.random.Generator(np.random.Philox(seq))

    def child(self, offset: int) -> "SampleStream":
        return SampleStream(self.root_seed, self.stream_index * 1_000_003 + offset + 1)


def sample_exact(m, t: float, x, count: int, stream: SampleStream) -> np.ndarray:
    """count i.i.d. draws Sigma_t^{1/2} Z + e^{tA}x."""
    law = push_forward(m, t, x)
    if t == 0:
        return np.repeat(law.mean[None, :], count, axis=0)
    return law.sample(count, stream.generator())


# ---------------------------------------------------------------------------
# test functions


def _rows(Y) -> np.ndarray:
    return np.atleast_2d(np.asarray(Y, float))


def _xlogx(v):
    v = np.asarray(v, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(v > 0, v * np.log(np.where(v > 0, v, 1.0)), 0.0)


def _scalar_xlogx(c: float) -> float:
    return c * math.log(c) if c > 0 else 0.0


class TestFunction:
    """A function on R^n with optional analytic gradient and Gaussian closed forms."""

    kind = "abstract"
    nonnegative = False
    __test__ = False  # not a pytest class

    def __call__(self, Y) -> np.ndarray:
        raise NotImplementedError

    def grad(self, Y) -> np.ndarray:
        raise MethodError(f"{self.kind} has no pointwise gradient")

    def mean(self, law: GaussianLaw) -> float:
        raise MethodError(f"no closed form for E {self.kind}")

    def grad_mean(self, law: GaussianLaw) -> np.ndarray:
        """E[grad f(Y)] = d/dm E f(Y), Y ~ N(m, S)."""
        raise MethodError(f"no closed form for E grad {self.kind}")

    def power_mean(self, law: GaussianLaw, alpha: float) -> float:
        raise MethodError(f"no closed form for E {self.kind}^alpha")

    def xlogx_mean(self, law: GaussianLaw) -> float:
        raise MethodError(f"no closed form for E {self.kind} log {self.kind}")

    def power(self, alpha: float) -> "TestFunction":
        return Power(self, alpha)

    def xlogx(self) -> "TestFunction":
        return XLogX(self)

    def describe(self) -> dict:
        return {"kind": self.kind}


class Constant(TestFunction):
    kind = "constant"

    def __init__(self, c: float):
        self.c = float(c)
        self.nonnegative = self.c >= 0

    def __call__(self, Y):
        return np.full(_rows(Y).shape[0], self.c)

    def grad(self, Y):
        return np.zeros_like(_rows(Y))

    def mean(self, law):
        return self.c

    def grad_mean(self, law):
        return np.zeros(law.n)

    def power_mean(self, law, alpha):
        return self.c ** alpha

    def xlogx_mean(self, law):
        return _scalar_xlogx(self.c)

    def describe(self):
        return {"kind": self.kind, "c": self.c}


class Linear(TestFunction):
    kind = "linear"

    def __init__(self, v, c: float = 0.0):
        self.v = np.asarray(v, float)
        self.c = float(c)

    def __call__(self, Y):
        return _rows(Y) @ self.v + self.c

    def grad(self, Y):
        return np.broadcast_to(self.v, _rows(Y).shape).copy()

    def mean(self, law):
        return float(self.v @ law.mean + self.c)

    def grad_mean(self, law):
        return self.v.copy()

    def power_mean(self, law, alpha):
        if alpha == 2:
            return self.mean(law) ** 2 + float(self.v @ law.cov @ self.v)
        return super().power_mean(law, alpha)

    def describe(self):
        return {"kind": self.kind, "v": self.v.tolist(), "c": self.c}


class Quadratic(TestFunction):
    """y^T S y + <v, y> + c with S symmetric."""

    kind = "quadratic"

    def __init__(self, S, v=None, c: float = 0.0):
        self.S = symmetrize(np.atleast_2d(np.asarray(S, float)))
        self.v = np.zeros(len(self.S)) if v is None else np.asarray(v, float)
        self.c = float(c)

    def __call__(self, Y):
        Y = _rows(Y)
        return np.einsum("ij,jk,ik->i", Y, self.S, Y) + Y @ self.v + self.c

    def grad(self, Y):
        return 2 * _rows(Y) @ self.S + self.v

    def mean(self, law):
        m = law.mean
        return float(m @ self.S @ m + np.trace(self.S @ law.cov) + self.v @ m + self.c)

    def grad_mean(self, law):
        return 2 * self.S @ law.mean + self.v

    def power_mean(self, law, alpha):
        if alpha != 2:
            return super().power_mean(law, alpha)
        SC = self.S @ law.cov
        b = 2 * self.S @ law.mean + self.v
        var = 2 * np.trace(SC @ SC) + b @ law.cov @ b
        return float(var + self.mean(law) ** 2)

    def describe(self):
        return {"kind": self.kind, "S": self.S.tolist(), "v": self.v.tolist(), "c": self.c}


class ExpLinear(TestFunction):
    """scale * exp(<v, y>)."""

    kind = "expLinear"
    nonnegative = True

    def __init__(self, v, scale: float = 1.0):
        self.v = np.asarray(v, float)
        self.scale = float(scale)
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def __call__(self, Y):
        return self.scale * np.exp(_rows(Y) @ self.v)

    def grad(self, Y):
        return self(Y)[:, None] * self.v[None, :]

    def _moments(self, law):
        return float(self.v @ law.mean), float(self.v @ law.cov @ self.v)

    def mean(self, law):
        mu, s2 = self._moments(law)
        return self.scale * math.exp(mu + s2 / 2)

    def grad_mean(self, law):
        return self.mean(law) * self.v

    def power_mean(self, law, alpha):
        mu, s2 = self._moments(law)
        return self.scale ** alpha * math.exp(alpha * mu + alpha ** 2 * s2 / 2)

    def xlogx_mean(self, law):
        # E[f (log c + <v,Y>)] with <v,Y> tilted by f: mean shifts by v^T S v
        mu, s2 = self._moments(law)
        return self.mean(law) * (math.log(self.scale) + mu + s2)

    def describe(self):
        return {"kind": self.kind, "v": self.v.tolist(), "scale": self.scale}


class Logistic(TestFunction):
    """shift + 1 / (1 + exp(-<v, y> - b))."""

    kind = "logistic"

    def __init__(self, v, b: float = 0.0, shift: float = 0.0):
        self.v = np.asarray(v, float)
        self.b = float(b)
        self.shift = float(shift)
        self.nonnegative = self.shift >= 0

    def __call__(self, Y):
        return self.shift + expit(_rows(Y) @ self.v + self.b)

    def grad(self, Y):
        s = expit(_rows(Y) @ self.v + self.b)
        return (s * (1 - s))[:, None] * self.v[None, :]

    def describe(self):
        return {"kind": self.kind, "v": self.v.tolist(), "b": self.b, "shift": self.shift}


class Halfspace(TestFunction):
    """shift + 1{<v, y> + b >= 0}."""

    kind = "halfspace"

    def __init__(self, v, b: float = 0.0, shift: float = 0.0):
        self.v = np.asarray(v, float)
        self.b = float(b)
        self.shift = float(shift)
        self.nonnegative = self.shift >= 0

    def __call__(self, Y):
        return self.shift + (_rows(Y) @ self.v + self.b >= 0).astype(float)

    def _z(self, law):
        s = math.sqrt(float(self.v @ law.cov @ self.v))
        if s == 0:
            raise DegenerateLawError("law is degenerate along the halfspace normal")
        return (float(self.v @ law.mean) + self.b) / s, s

    def _prob(self, law) -> float:
        return float(ndtr(self._z(law)[0]))

    def mean(self, law):
        return self.shift + self._prob(law)

    def grad_mean(self, law):
        z, s = self._z(law)
        return self.v * math.exp(-0.5 * z * z) / (math.sqrt(2 * math.pi) * s)

    def power_mean(self, law, alpha):
        p = self._prob(law)
        lo, hi = self.shift ** alpha, (1 + self.shift) ** alpha
        return lo + (hi - lo) * p

    def xlogx_mean(self, law):
        p = self._prob(law)
        lo, hi = _scalar_xlogx(self.shift), _scalar_xlogx(1 + self.shift)
        return lo + (hi - lo) * p

    def log_prob(self, law) -> float:
        return float(log_ndtr(self._z(law)[0]))

    def describe(self):
        return {"kind": self.kind, "v": self.v.tolist(), "b": self.b, "shift": self.shift}


class Power(TestFunction):
    kind = "power"

    def __init__(self, base: TestFunction, alpha: float):
        self.base = base
        self.alpha = float(alpha)

    def __call__(self, Y):
        return np.power(self.base(Y), self.alpha)

    def mean(self, law):
        return self.base.power_mean(law, self.alpha)

    def describe(self):
        return {"kind": self.kind, "alpha": self.alpha, "base": self.base.describe()}


class XLogX(TestFunction):
    kind = "xlogx"

    def __init__(self, base: TestFunction):
        self.base = base

    def __call__(self, Y):
        return _xlogx(self.base(Y))

    def mean(self, law):
        return self.base.xlogx_mean(law)

    def describe(self):
        return {"kind": self.kind, "base": self.base.describe()}


def make_test_function(kind: str, n: int, rng: np.random.Generator | None = None, **params) -> TestFunction:
    """Build a test function by name; missing direction vectors are drawn from ``rng``."""
    def vec(name):
        if name in params:
            return np.asarray(params[name], float)
        if rng is None:
            return np.ones(n) / math.sqrt(n)
        return rng.standard_normal(n)

    if kind == "constant":
        return Constant(params.get("c", 1.0))
    if kind == "linear":
        return Linear(vec("v"), params.get("c", 0.0))
    if kind == "quadratic":
        return Quadratic(params.get("S", np.eye(n)), params.get("v"), params.get("c", 0.0))
    if kind == "expLinear":
        return ExpLinear(vec("v"), params.get("scale", 1.0))
    if kind == "logistic":
        return Logistic(vec("v"), params.get("b", 0.0), params.get("shift", 0.0))
    if kind == "halfspace":
        return Halfspace(vec("v"), params.get("b", 0.0), params.get("shift", 0.0))
    raise ValueError(f"unknown test function kind {kind!r}")


# ---------------------------------------------------------------------------
# evaluation methods


@dataclass(frozen=True)
class ClosedForm:
    name = "closedForm"
    statistical = False


@dataclass(frozen=True)
class GaussHermite:
    order: int = 40
    name = "gaussHermite"
    statistical = False

    def __post_init__(self):
        if not 2 <= self.order <= GH_MAX_ORDER:
            raise MethodError(f"Gauss-Hermite order must be in [2, {GH_MAX_ORDER}]")


@dataclass(frozen=True)
class MonteCarlo:
    count: int = 100_000
    stream: SampleStream = field(default_factory=lambda: SampleStream(0))
    name = "monteCarlo"
    statistical = True


@dataclass(frozen=True)
class Estimate:
    value: object  # float or vector
    error: object


def _gh_grid(law: GaussianLaw, order: int):
    if law.n > GH_MAX_DIM:
        raise MethodError(f"Gauss-Hermite tensor grids are limited to n <= {GH_MAX_DIM}")
    z, w = hermegauss(order)
    w = w / math.sqrt(2 * math.pi)
    Z = np.array(list(product(z, repeat=law.n)))
    W = np.prod(np.array(list(product(w, repeat=law.n))), axis=1)
    return law.mean + Z @ law.root().T, W


def _gh(law, fn, order):
    Y, W = _gh_grid(law, order)
    return np.tensordot(W, fn(Y), axes=(0, 0))


def expect(law: GaussianLaw, f: TestFunction, method=ClosedForm()) -> Estimate:
    """E f(Y) for Y ~ law, with an error estimate (0 for closed forms)."""
    if isinstance(method, ClosedForm):
        return Estimate(float(f.mean(law)), 0.0)
    if isinstance(method, GaussHermite):
        hi = float(_gh(law, f, method.order))
        lo = float(_gh(law, f, max(2, (3 * method.order) // 4)))
        return Estimate(hi, abs(hi - lo))
    if isinstance(method, MonteCarlo):
        vals = f(law.sample(method.count, method.stream.generator()))
        return Estimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(vals.size)))
    raise MethodError(f"unknown method {method!r}")


def expect_grad(law: GaussianLaw, f: TestFunction, method=ClosedForm()) -> Estimate:
    """E grad f(Y) for Y ~ law."""
    if isinstance(method, ClosedForm):
        return Estimate(np.asarray(f.grad_mean(law), float), np.zeros(law.n))
    if isinstance(f, Halfspace):
        raise MethodError("halfspace indicators have no pointwise gradient; use the closed form")
    if isinstance(method, GaussHermite):
        hi = _gh(law, f.grad, method.order)
        lo = _gh(law, f.grad, max(2, (3 * method.order) // 4))
        return Estimate(hi, np.abs(hi - lo))
    if isinstance(method, MonteCarlo):
        G = f.grad(law.sample(method.count, method.stream.generator()))
        return Estimate(G.mean(axis=0), G.std(axis=0, ddof=1) / math.sqrt(len(G)))
    raise MethodError(f"unknown method {method!r}")


def expectation(m, t: float, x, f: TestFunction, method=ClosedForm()) -> Estimate:
    """P_t f(x) with an error estimate."""
    return expect(push_forward(m, t, x), f, method)


def grad_Ptf(m, t: float, x, f: TestFunction, method=ClosedForm()) -> Estimate:
    """grad P_t f(x) = e^{tA^T} E[grad f(x_t)]."""
    mm = _as_linear(m)
    law = push_forward(mm, t, x)
    F_T = expm(t * mm.A).T
    est = expect_grad(law, f, method)
    err = np.abs(F_T) @ np.asarray(est.error, float)
    return Estimate(F_T @ est.value, err)
