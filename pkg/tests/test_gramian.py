import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad_vec

from gramlab.gramian import (TimeRangeError, check_backward_ode, check_backward_ode_g2, check_g2_bound, cov_sigma,
                             gramian_bundle, gramian_G, gramian_G2, gramian_table, is_psd, lambda2_min, lambda_min)
from gramlab.linalg import expm, spd_min_eig
from gramlab.model import LinearModel, Spectrum, ZooId, default_zoo, lift_kronecker, zoo_build

ZOO = [zoo_build(z) for z in default_zoo()]
ZOO_IDS = [z.label() for z in default_zoo()]


def quad_G(m, t):
    A, Q = m.A_bar, m.sigma_bar @ m.sigma_bar.T
    val, _ = quad_vec(lambda u: expm(-u * A) @ Q @ expm(-u * A).T, 0.0, t, epsabs=1e-13, epsrel=1e-12)
    return val


def quad_G2(m, t):
    A, Q = m.A_bar, m.sigma_bar @ m.sigma_bar.T
    val, _ = quad_vec(lambda u: u * expm(-u * A) @ Q @ expm(-u * A).T, 0.0, t, epsabs=1e-13, epsrel=1e-12)
    return val


@pytest.mark.parametrize("km", ZOO, ids=ZOO_IDS)
@pytest.mark.parametrize("t", [0.05, 0.7, 2.5])
def test_gramians_match_quadrature(km, t):
    G = gramian_G(km, 0.0, t)
    assert np.allclose(G, quad_G(km, t), rtol=1e-9, atol=1e-12 * np.abs(G).max())
    G2 = gramian_G2(km, 0.0, t)
    assert np.allclose(G2, quad_G2(km, t), rtol=1e-9, atol=1e-12 * np.abs(G2).max())


def test_kolmogorov_closed_form():
    km = zoo_build(ZooId("kolmogorov"))
    for t in (1e-3, 0.5, 4.0):
        exact = np.array([[t, -t ** 2 / 2], [-t ** 2 / 2, t ** 3 / 3]])
        assert np.allclose(gramian_G(km, 0.0, t), exact, rtol=1e-12, atol=0)
        tr, det = t + t ** 3 / 3, t ** 4 / 12
        smallest = det / ((tr + np.sqrt(tr ** 2 - 4 * det)) / 2)
        assert lambda_min(km, t) == pytest.approx(smallest, rel=1e-12)


@pytest.mark.parametrize("km", ZOO, ids=ZOO_IDS)
@given(s=st.floats(0.01, 2.0), t=st.floats(0.01, 2.0))
def test_additivity_and_covariance(km, s, t):
    A = km.A_bar
    Gt, Gs, Gts = gramian_G(km, 0, t), gramian_G(km, 0, s), gramian_G(km, 0, t + s)
    E = expm(-t * A)
    assert np.allclose(Gts, Gt + E @ Gs @ E.T, rtol=1e-10, atol=1e-13)
    F = expm(t * A)
    assert np.allclose(cov_sigma(km, t), F @ Gt @ F.T, rtol=1e-9, atol=1e-13)


@pytest.mark.parametrize("km", ZOO, ids=ZOO_IDS)
def test_monotone_in_time(km):
    times = [0.1, 0.5, 1.0, 2.0]
    Gs = [gramian_G(km, 0, t) for t in times]
    for a, b in zip(Gs, Gs[1:]):
        assert is_psd(b - a, tol=1e-12)
    lams = [lambda_min(km, t) for t in times]
    assert all(x < y for x, y in zip(lams, lams[1:]))


def test_shift_invariance():
    km = zoo_build(ZooId("damped-osc", j=4))
    assert np.allclose(gramian_G(km, 0.4, 1.5), gramian_G(km, 0.0, 1.1), rtol=1e-12)
    with pytest.raises(TimeRangeError):
        gramian_G(km, 1.0, 0.5)


@pytest.mark.parametrize("k", [1, 3])
def test_kronecker_consistency(k):
    km = zoo_build(ZooId("coupled-osc", j=3), Spectrum("power", 2.0))
    m = lift_kronecker(km, k)
    alpha = km.spectrum.alphas(k)
    t = 1.3
    G = gramian_G(m, 0, t)
    assert np.allclose(G, np.kron(gramian_G(km, 0, t), np.diag(alpha)), rtol=1e-12, atol=1e-15)
    assert lambda_min(m, t) == pytest.approx(lambda_min(km, t) * alpha.min(), rel=1e-9)


@pytest.mark.parametrize("km", ZOO, ids=ZOO_IDS)
def test_lambda_routes_agree(km):
    for t in (0.2, 1.0, 2.0):
        assert lambda_min(km, t) == pytest.approx(spd_min_eig(gramian_G(km, 0, t)), rel=1e-8)
        assert lambda2_min(km, t) == pytest.approx(spd_min_eig(gramian_G2(km, 0, t)), rel=1e-8)


def test_large_time_stays_finite():
    km = zoo_build(ZooId("kinetic-fp", gamma=3.0))
    lam, lam2 = lambda_min(km, 20.0), lambda2_min(km, 20.0)
    assert np.isfinite(lam) and lam > 0
    assert np.isfinite(lam2) and lam2 > lam  # G2 >= t G(t/2)-ish growth dominates here


def test_singular_model_gives_zero():
    m = LinearModel(np.zeros((2, 2)), [[1.0, 0.0], [0.0, 0.0]])
    with pytest.warns(RuntimeWarning):
        assert lambda_min(m, 1.0) == 0.0


@pytest.mark.parametrize("km", ZOO, ids=ZOO_IDS)
def test_backward_odes(km):
    assert check_backward_ode(km, 0.5, 2.0) < 1e-6
    assert check_backward_ode_g2(km, 0.5, 2.0) < 1e-6


@pytest.mark.parametrize("km", ZOO, ids=ZOO_IDS)
def test_g2_chain(km):
    for s, t in [(0.3, 1.0), (1.0, 3.0)]:
        first, second, third, holds = check_g2_bound(km, s, t)
        assert holds and first >= second >= third > 0


def test_bundle_and_table():
    km = zoo_build(ZooId("kolmogorov"))
    b = gramian_bundle(km, 1.0)
    assert b.condition == pytest.approx(np.linalg.cond(b.G), rel=1e-8)
    rows = gramian_table(km, [0.5, 1.0])
    assert [r[0] for r in rows] == [0.5, 1.0]
