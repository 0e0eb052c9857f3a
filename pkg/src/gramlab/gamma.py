"""Exact generator L, carre du champ Gamma^G and its iterate Gamma_2^G on polynomials.

For L f = <A x, grad f> + (1/2) tr(sigma sigma^T Hess f) and a symmetric
matrix G we have

    Gamma^G(f, g)  = <G grad f, grad g>
    Gamma_2^G(f)   = (1/2) L Gamma^G(f) - Gamma^G(f, L f)
                   = -Gamma^{AG}(f) + (1/2) sum_l Gamma^G((sigma^T grad f)_l)

The second line is checked here as an exact polynomial identity.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .polynomial import MultiPoly, random_fraction, random_poly


def _fmatrix(M) -> tuple:
    rows = tuple(tuple(Fraction(v) for v in row) for row in M)
    if any(len(r) != len(rows) for r in rows):
        raise ValueError("expected a square matrix")
    return rows


def _matmul(X, Y):
    n = len(X)
    return tuple(tuple(sum((X[i][k] * Y[k][j] for k in range(n)), Fraction(0)) for j in range(n))
                 for i in range(n))


def _transpose(X):
    return tuple(zip(*X))


@dataclass(frozen=True)
class RationalModel:
    """Drift A and noise sigma with exact rational entries.

    Floats are accepted and converted exactly (every double is a dyadic
    rational). Irrational noise such as sqrt(2) I should be replaced by any
    rational sigma' with the same sigma' sigma'^T, which leaves L unchanged.
    """

    A: tuple
    sigma: tuple

    def __post_init__(self):
        A, sigma = _fmatrix(self.A), _fmatrix(self.sigma)
        if len(A) != len(sigma):
            raise ValueError("A and sigma must have the same size")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "sigma", sigma)

    @property
    def n(self) -> int:
        return len(self.A)

    @property
    def Q(self):
        return _matmul(self.sigma, _transpose(self.sigma))

    @classmethod
    def from_linear(cls, m) -> "RationalModel":
        return cls(m.A.tolist(), m.sigma.tolist())


def _check(n, f: MultiPoly):
    if f.nvars != n:
        raise ValueError(f"polynomial has {f.nvars} variables, model has {n}")


def apply_L(m: RationalModel, f: MultiPoly) -> MultiPoly:
    _check(m.n, f)
    n = m.n
    grad = f.gradient()
    out = MultiPoly(n)
    for i in range(n):
        drift_i = MultiPoly.linear(m.A[i])
        out = out + drift_i * grad[i]
    Q = m.Q
    for i in range(n):
        for j in range(n):
            if Q[i][j]:
                out = out + grad[i].diff(j) * (Q[i][j] / 2)
    return out


def gamma_G(G, f: MultiPoly, g: MultiPoly) -> MultiPoly:
    """<G grad f, grad g>."""
    G = _fmatrix(G)
    _check(len(G), f)
    _check(len(G), g)
    gf, gg = f.gradient(), g.gradient()
    out = MultiPoly(f.nvars)
    for i, row in enumerate(G):
        if gf[i].is_zero():
            continue
        for j, c in enumerate(row):
            if c and not gg[j].is_zero():
                out = out + gf[i] * gg[j] * c
    return out


def gamma2_by_definition(m: RationalModel, G, f: MultiPoly) -> MultiPoly:
    return apply_L(m, gamma_G(G, f, f)) * Fraction(1, 2) - gamma_G(G, f, apply_L(m, f))


def noise_directional(m: RationalModel, f: MultiPoly) -> list:
    """The components (sigma^T grad f)_l."""
    grad = f.gradient()
    out = []
    for col in range(m.n):
        h = MultiPoly(f.nvars)
        for i in range(m.n):
            if m.sigma[i][col]:
                h = h + grad[i] * m.sigma[i][col]
        out.append(h)
    return out


def curvature_remainder(m: RationalModel, G, f: MultiPoly) -> MultiPoly:
    """(1/2) sum_l Gamma^G((sigma^T grad f)_l), nonnegative when G is PSD."""
    out = MultiPoly(f.nvars)
    for h in noise_directional(m, f):
        out = out + gamma_G(G, h, h)
    return out * Fraction(1, 2)


def gamma2_by_formula(m: RationalModel, G, f: MultiPoly) -> MultiPoly:
    AG = _matmul(m.A, _fmatrix(G))
    return curvature_remainder(m, G, f) - gamma_G(AG, f, f)


# ---------------------------------------------------------------------------
# random instances and the identity sweep


def random_rational_matrix(rng: random.Random, n: int, zero_prob: float = 0.3):
    return [[Fraction(0) if rng.random() < zero_prob else random_fraction(rng) for _ in range(n)]
            for _ in range(n)]


def random_symmetric(rng: random.Random, n: int):
    M = random_rational_matrix(rng, n)
    return [[(M[i][j] + M[j][i]) / 2 for j in range(n)] for i in range(n)]


def random_psd(rng: random.Random, n: int):
    B = random_rational_matrix(rng, n)
    return [list(r) for r in _matmul(_fmatrix(B), _transpose(_fmatrix(B)))]


@dataclass
class IdentityCheck:
    count: int
    mismatches: int
    negative_remainders: int
    seed: int

    @property
    def passed(self) -> bool:
        return self.mismatches == 0 and self.negative_remainders == 0


def check_gamma2_identity(count: int = 200, seed: int = 0, max_n: int = 4, max_degree: int = 4,
                          points: int = 0) -> IdentityCheck:
    """Compare both forms of Gamma_2^G on random rational (model, G, f).

    With ``points > 0`` the matrix G is drawn PSD and the curvature remainder
    is also evaluated at that many random rational points, all of which must
    be nonnegative.
    """
    rng = random.Random(seed)
    mismatches = negatives = 0
    for _ in range(count):
        n = rng.randint(1, max_n)
        m = RationalModel(random_rational_matrix(rng, n), random_rational_matrix(rng, n, 0.5))
        G = random_psd(rng, n) if points else random_symmetric(rng, n)
        f = random_poly(rng, n, rng.randint(1, max_degree), density=0.4)
        lhs = gamma2_by_definition(m, G, f)
        rhs = gamma2_by_formula(m, G, f)
        if not (lhs - rhs).is_zero():
            mismatches += 1
        if points:
            rem = curvature_remainder(m, G, f)
            for _ in range(points):
                pt = [random_fraction(rng, 9, 5) for _ in range(n)]
                if rem.evaluate(pt) < 0:
                    negatives += 1
    return IdentityCheck(count, mismatches, negatives, seed)
