import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gramlab.linalg import (DimensionError, NotPositiveDefiniteError, SymmetryError, as_matrix, check_symmetric,
                            cholesky_spd, expm, numerical_rank, spd_inverse, spd_min_eig, std_normal_cdf, sym_eig)

small = st.floats(-2, 2, allow_nan=False, allow_infinity=False)


def square(n):
    return arrays(np.float64, (n, n), elements=small)


@given(square(3), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_expm_semigroup(M, s, t):
    lhs = expm((s + t) * M)
    rhs = expm(s * M) @ expm(t * M)
    assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-10)


@given(square(4))
def test_expm_inverse(M):
    assert np.allclose(expm(M) @ expm(-M), np.eye(4), atol=1e-8)


def test_expm_nilpotent_is_polynomial():
    N = np.diag([1.0, 2.0, 3.0], k=1)
    assert np.allclose(expm(N), np.eye(4) + N + N @ N / 2 + N @ N @ N / 6, atol=1e-15)


@given(square(4))
def test_sym_eig_reconstructs(M):
    S = M + M.T
    res = sym_eig(S)
    V, w = res.eigenvectors, res.eigenvalues
    assert np.allclose(V @ np.diag(w) @ V.T, S, atol=1e-10)
    assert res.min_eig <= res.max_eig


def _sturm_count(d, e, x):
    """Eigenvalues of the symmetric tridiagonal (d, e) below x."""
    count, q = 0, 1.0
    for i in range(len(d)):
        q = d[i] - x - (e[i - 1] ** 2 / q if i else 0.0)
        if q == 0:
            q = 1e-300
        count += q < 0
    return count


def test_sym_eig_against_bisection(rng):
    d, e = rng.normal(size=6), rng.normal(size=5)
    S = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    w = sym_eig(S).eigenvalues
    bound = np.abs(d).max() + 2 * np.abs(e).max()
    for i in range(6):
        lo, hi = -bound, bound
        for _ in range(200):
            mid = (lo + hi) / 2
            lo, hi = (mid, hi) if _sturm_count(d, e, mid) <= i else (lo, mid)
        assert w[i] == pytest.approx(lo, abs=1e-12)


def test_check_symmetric_rejects():
    with pytest.raises(SymmetryError):
        check_symmetric([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(DimensionError):
        as_matrix(np.ones((2, 3)), square=True)


def test_spd_inverse_badly_scaled():
    D = np.diag([1e-8, 1.0, 1e8])
    C = np.array([[1.0, 0.3, 0.1], [0.3, 1.0, 0.2], [0.1, 0.2, 1.0]])
    S = D @ C @ D
    inv = spd_inverse(S)
    assert np.allclose(D @ inv @ D, np.linalg.inv(C), rtol=1e-10)
    assert spd_min_eig(np.diag([3.0, 0.5])) == pytest.approx(0.5)


def test_cholesky_rejects_singular():
    with pytest.raises(NotPositiveDefiniteError):
        cholesky_spd(np.array([[1.0, 1.0], [1.0, 1.0]]))
    L = cholesky_spd(np.array([[4.0, 2.0], [2.0, 3.0]]))
    assert np.allclose(L @ L.T, [[4.0, 2.0], [2.0, 3.0]])


@given(st.permutations(range(4)))
def test_rank_permutation_invariant(perm):
    M = np.array([[1.0, 2, 3, 4], [2, 4, 6, 8], [0, 1, 0, 1], [1, 3, 3, 5]])
    assert numerical_rank(M) == 2
    assert numerical_rank(M[list(perm)]) == 2
    assert numerical_rank(M[:, list(perm)]) == 2


def test_normal_cdf_series():
    x = 1.0
    series = 0.5 + sum((-1) ** n * x ** (2 * n + 1) / (2 ** n * math.factorial(n) * (2 * n + 1))
                       for n in range(40)) / math.sqrt(2 * math.pi)
    assert std_normal_cdf(x) == pytest.approx(series, rel=1e-14)
    assert std_normal_cdf(0.0) == 0.5
