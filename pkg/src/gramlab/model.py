"""Linear SDE models dx = A x dt + sigma dB, Kronecker lifts and the example zoo."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, special

from .linalg import DEFAULT_RANK_TOL, DimensionError, as_matrix, numerical_rank

ZOO_NAMES = ("kolmogorov", "iterated-kolmogorov", "kinetic-fp", "coupled-osc", "damped-osc")
GAMMA_WARN_BAND = 1e-3


class ModelInputError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LinearModel:
    A: np.ndarray
    sigma: np.ndarray
    name: str = "explicit"

    def __post_init__(self):
        A = as_matrix(self.A, square=True)
        sigma = as_matrix(self.sigma, square=True)
        if A.shape != sigma.shape:
            raise DimensionError(f"A is {A.shape} but sigma is {sigma.shape}")
        A.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "sigma", sigma)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def Q(self) -> np.ndarray:
        """Diffusion matrix sigma sigma^T."""
        return self.sigma @ self.sigma.T


# ---------------------------------------------------------------------------
# noise spectra


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues alpha_1 >= alpha_2 >= ... of the noise covariance.

    ``kind`` is ``power`` (alpha_k = k^-p), ``polylog``
    (alpha_k = 1 / (k log(k+1)^p)) or ``explicit`` (a finite list, zero beyond).
    """

    kind: str
    p: float = 2.0
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("power", "polylog", "explicit"):
            raise ModelInputError(f"unknown spectrum kind {self.kind!r}")
        if self.kind == "explicit":
            vals = tuple(float(v) for v in self.values)
            if not vals or any(not (v > 0 and math.isfinite(v)) for v in vals):
                raise ModelInputError("explicit spectrum needs positive finite values")
            object.__setattr__(self, "values", vals)
        elif not self.p > 1:
            raise ModelInputError("spectrum exponent p must exceed 1")

    @property
    def length(self) -> float:
        return len(self.values) if self.kind == "explicit" else math.inf

    def alpha(self, k: int) -> float:
        """The k-th eigenvalue, 1-based."""
        if k < 1:
            raise ModelInputError("mode index starts at 1")
        if self.kind == "power":
            return float(k) ** (-self.p)
        if self.kind == "polylog":
            return 1.0 / (k * math.log(k + 1.0) ** self.p)
        if k > len(self.values):
            return 0.0
        return self.values[k - 1]

    def alphas(self, k: int) -> np.ndarray:
        if k > self.length:
            raise ModelInputError(f"requested {k} modes, spectrum has {self.length}")
        return np.array([self.alpha(i) for i in range(1, k + 1)])

    def _density(self, x: float) -> float:
        if self.kind == "power":
            return x ** (-self.p)
        return 1.0 / (x * math.log(x + 1.0) ** self.p)

    def _integral_from(self, a: float) -> float:
        if self.kind == "power":
            return a ** (1.0 - self.p) / (self.p - 1.0)
        # substitute x = e^u to tame the slowly decaying tail
        val, _ = integrate.quad(
            lambda u: 1.0 / math.log(math.exp(u) + 1.0) ** self.p
            if u < 700 else u ** (-self.p),
            math.log(a), np.inf, limit=200, epsabs=0.0, epsrel=1e-13,
        )
        return val

    def tail(self, k: int) -> float:
        """sum_{l > k} alpha_l, evaluated analytically (no naive truncation)."""
        if k < 0:
            raise ModelInputError("k must be nonnegative")
        if self.kind == "explicit":
            return float(sum(self.values[k:]))
        if self.kind == "power":
            return float(special.zeta(self.p, k + 1.0))  # Hurwitz zeta
        # polylog: explicit head plus Euler-Maclaurin remainder
        m = k + 2000
        head = math.fsum(self.alpha(i) for i in range(k + 1, m))
        f = self._density
        h = 1e-4 * m
        df = (f(m + h) - f(m - h)) / (2 * h)
        return head + self._integral_from(m) + 0.5 * f(m) - df / 12.0

    def tail_bracket(self, k: int) -> tuple:
        """Integral comparison bounds (lower, upper) on the tail."""
        if self.kind == "explicit":
            t = self.tail(k)
            return t, t
        lower = self._integral_from(k + 1.0)
        if k == 0:
            upper = self.alpha(1) + self._integral_from(1.0)
        else:
            upper = self._integral_from(float(k))
        return lower, upper

    def to_dict(self) -> dict:
        if self.kind == "explicit":
            return {"kind": "explicit", "values": list(self.values)}
        return {"kind": self.kind, "p": self.p}

    @classmethod
    def parse(cls, text: str) -> "Spectrum":
        """Parse ``power:2``, ``polylog:1.5`` or ``explicit:1,0.25``."""
        kind, _, arg = text.partition(":")
        kind = kind.strip().lower()
        if kind in ("power", "polylog"):
            return cls(kind, p=float(arg) if arg else 2.0)
        if kind == "explicit":
            return cls("explicit", values=tuple(float(v) for v in arg.split(",")))
        raise ModelInputError(f"cannot parse spectrum {text!r}")


UNIT_SPECTRUM = Spectrum("explicit", values=(1.0,))


@dataclass(frozen=True, eq=False)
class KroneckerModel:
    """Underlying pair (A_bar, sigma_bar) with noise covariance spectrum.

    The lifted state is laid out blockwise: x = (x_1, ..., x_j), each block
    holding the k retained modes.
    """

    A_bar: np.ndarray
    sigma_bar: np.ndarray
    spectrum: Spectrum = UNIT_SPECTRUM
    name: str = "explicit"

    def __post_init__(self):
        under = LinearModel(self.A_bar, self.sigma_bar)
        object.__setattr__(self, "A_bar", under.A)
        object.__setattr__(self, "sigma_bar", under.sigma)

    @property
    def j(self) -> int:
        return self.A_bar.shape[0]

    @property
    def underlying(self) -> LinearModel:
        return LinearModel(self.A_bar, self.sigma_bar, name=self.name)

    def with_spectrum(self, spectrum: Spectrum) -> "KroneckerModel":
        return KroneckerModel(self.A_bar, self.sigma_bar, spectrum, self.name)

    def lift(self, k: int) -> LinearModel:
        return lift_kronecker(self, k)


def kalman_matrix(m: LinearModel) -> np.ndarray:
    """[sigma, A sigma, ..., A^{n-1} sigma], shape n x n^2."""
    blocks = [m.sigma]
    for _ in range(m.n - 1):
        blocks.append(m.A @ blocks[-1])
    return np.hstack(blocks)


def check_kalman(m, tol: float = DEFAULT_RANK_TOL) -> bool:
    if isinstance(m, KroneckerModel):
        m = m.underlying
    return numerical_rank(kalman_matrix(m), tol) == m.n


def lift_kronecker(km: KroneckerModel, k: int) -> LinearModel:
    """A = A_bar (x) I_k, sigma = sigma_bar (x) diag(sqrt(alpha_1..alpha_k))."""
    if k < 1 or k > km.spectrum.length:
        raise ModelInputError(f"cannot lift with k={k}; spectrum length {km.spectrum.length}")
    root = np.sqrt(km.spectrum.alphas(k))
    A = np.kron(km.A_bar, np.eye(k))
    sigma = np.kron(km.sigma_bar, np.diag(root))
    return LinearModel(A, sigma, name=f"{km.name}[k={k}]")


# ---------------------------------------------------------------------------
# zoo


def tridiagonal(j: int, sub: float, diag: float, sup: float) -> np.ndarray:
    return (np.diag(np.full(j - 1, float(sub)), -1) + np.diag(np.full(j, float(diag)))
            + np.diag(np.full(j - 1, float(sup)), 1))


def unit_entry(j: int, row: int = 0, col: int = 0) -> np.ndarray:
    E = np.zeros((j, j))
    E[row, col] = 1.0
    return E


@dataclass(frozen=True)
class ZooId:
    name: str
    j: Optional[int] = None
    gamma: Optional[float] = None

    def __post_init__(self):
        if self.name not in ZOO_NAMES:
            raise ModelInputError(f"unknown zoo model {self.name!r}; choose from {ZOO_NAMES}")
        defaults = {"kolmogorov": 2, "iterated-kolmogorov": 3, "kinetic-fp": 2,
                    "coupled-osc": 3, "damped-osc": 3}
        j = defaults[self.name] if self.j is None else int(self.j)
        object.__setattr__(self, "j", j)
        if self.name in ("kolmogorov", "kinetic-fp") and j != 2:
            raise ModelInputError(f"{self.name} has j = 2")
        if self.name == "iterated-kolmogorov" and j < 1:
            raise ModelInputError("iterated-kolmogorov needs j >= 1")
        if self.name == "coupled-osc" and j < 2:
            raise ModelInputError("coupled-osc needs j >= 2")
        if self.name == "damped-osc" and j < 3:
            raise ModelInputError("damped-osc needs j >= 3")
        if self.name == "kinetic-fp":
            if self.gamma is None or not self.gamma > 0 or not math.isfinite(self.gamma):
                raise ModelInputError("kinetic-fp needs a friction gamma > 0")
            if self.gamma == 2:
                raise ModelInputError("kinetic-fp excludes gamma = 2 (repeated eigenvalue)")
            if abs(self.gamma - 2) < GAMMA_WARN_BAND:
                warnings.warn(f"gamma={self.gamma} is within {GAMMA_WARN_BAND} of 2; "
                              "eigenvalue formulas are ill-conditioned", RuntimeWarning)
        elif self.gamma is not None:
            raise ModelInputError(f"{self.name} takes no gamma")

    def label(self) -> str:
        if self.name == "kinetic-fp":
            return f"kinetic-fp(gamma={self.gamma:g})"
        if self.name == "kolmogorov":
            return "kolmogorov"
        return f"{self.name}(j={self.j})"


def zoo_build(zid: ZooId, spectrum: Spectrum = UNIT_SPECTRUM) -> KroneckerModel:
    j = zid.j
    if zid.name == "kolmogorov":
        A = [[0.0, 0.0], [1.0, 0.0]]
        sigma = unit_entry(2)
    elif zid.name == "iterated-kolmogorov":
        A = tridiagonal(j, 1, 0, 0)
        sigma = unit_entry(j)
    elif zid.name == "kinetic-fp":
        g = float(zid.gamma)
        A = [[0.0, 1.0], [-1.0, -g]]
        sigma = [[0.0, 0.0], [0.0, math.sqrt(g)]]
    elif zid.name == "coupled-osc":
        A = tridiagonal(j, 1, 0, -1)
        sigma = unit_entry(j)
    else:  # damped-osc
        A = tridiagonal(j, 1, 0, -1) - unit_entry(j)
        sigma = unit_entry(j)
    return KroneckerModel(np.asarray(A, float), np.asarray(sigma, float), spectrum, zid.label())


def default_zoo() -> list:
    """The five representative zoo instances used by the sweeps."""
    return [ZooId("kolmogorov"), ZooId("iterated-kolmogorov", j=3), ZooId("kinetic-fp", gamma=3.0),
            ZooId("coupled-osc", j=3), ZooId("damped-osc", j=3)]


def parse_zoo(text: str) -> ZooId:
    """Parse ``kinetic-fp:gamma=3`` or ``coupled-osc:j=4`` style identifiers."""
    name, _, rest = text.partition(":")
    kwargs = {}
    for part in filter(None, rest.split(",")):
        key, _, val = part.partition("=")
        key = key.strip()
        if key == "j":
            kwargs["j"] = int(val)
        elif key == "gamma":
            kwargs["gamma"] = float(val)
        else:
            raise ModelInputError(f"unknown zoo parameter {key!r}")
    return ZooId(name.strip(), **kwargs)


# ---------------------------------------------------------------------------
# model files


@dataclass
class ModelSpec:
    """What a model file or ``--model`` argument resolves to."""

    linear: LinearModel
    kronecker: Optional[KroneckerModel] = None
    k: int = 1
    source: dict = field(default_factory=dict)


def _require(doc: dict, *keys):
    missing = [k for k in keys if k not in doc]
    if missing:
        raise ModelInputError(f"model file is missing {', '.join(missing)}")


def model_from_dict(doc: dict) -> ModelSpec:
    if not isinstance(doc, dict):
        raise ModelInputError("model file must hold a JSON object")
    if "A" in doc:
        _require(doc, "A", "sigma")
        m = LinearModel(np.asarray(doc["A"], float), np.asarray(doc["sigma"], float),
                        name=doc.get("name", "explicit"))
        return ModelSpec(m, None, 1, doc)
    spec_doc = dict(doc.get("spectrum") or {"kind": "explicit", "values": [1.0]})
    k = int(doc.get("k", spec_doc.pop("k", 1)))
    spectrum = Spectrum(spec_doc["kind"], p=float(spec_doc.get("p", 2.0)),
                        values=tuple(spec_doc.get("values", ())))
    if "A_bar" in doc:
        _require(doc, "A_bar", "sigma_bar")
        km = KroneckerModel(np.asarray(doc["A_bar"], float), np.asarray(doc["sigma_bar"], float),
                            spectrum, doc.get("name", "explicit"))
    else:
        try:
            zid = ZooId(doc["name"], doc.get("j"), doc.get("gamma"))
        except KeyError as exc:
            raise ModelInputError("model file needs 'A'/'sigma', 'A_bar'/'sigma_bar' or a zoo 'name'") from exc
        km = zoo_build(zid, spectrum)
    return ModelSpec(lift_kronecker(km, k), km, k, doc)


def model_to_dict(spec: ModelSpec) -> dict:
    if spec.source:
        return dict(spec.source)
    return {"name": spec.linear.name, "A": spec.linear.A.tolist(), "sigma": spec.linear.sigma.tolist()}


def load_model(path_or_name: str) -> ModelSpec:
    """Load a JSON model file, or parse a zoo identifier such as ``kinetic-fp:gamma=3``."""
    if path_or_name.endswith(".json"):
        with open(path_or_name) as fh:
            return model_from_dict(json.load(fh))
    zid = parse_zoo(path_or_name)
    doc = {"name": zid.name, "j": zid.j}
    if zid.gamma is not None:
        doc["gamma"] = zid.gamma
    return model_from_dict(doc)


def dump_model(spec: ModelSpec, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(spec), fh, indent=2, sort_keys=True)
