import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from gramlab.gramian import cov_sigma
from gramlab.linalg import expm
from gramlab.model import ZooId, zoo_build
from gramlab.semigroup import (ClosedForm, DegenerateLawError, GaussHermite, GaussianLaw, MethodError, MonteCarlo,
                               SampleStream, density, expect, expectation, grad_Ptf, make_test_function,
                               push_forward, sample_exact)

KOLMO = zoo_build(ZooId("kolmogorov"))
KFP = zoo_build(ZooId("kinetic-fp", gamma=3.0))


@given(st.floats(0.05, 2.0), st.floats(0.05, 2.0))
def test_chapman_kolmogorov(s, t):
    x = np.array([0.4, -1.1])
    direct = push_forward(KFP, s + t, x)
    first = push_forward(KFP, s, x)
    F = expm(t * KFP.A_bar)
    assert np.allclose(direct.mean, F @ first.mean, atol=1e-12)
    assert np.allclose(direct.cov, F @ first.cov @ F.T + cov_sigma(KFP, t), rtol=1e-10, atol=1e-14)


def test_sampler_moments():
    x = np.array([1.0, 2.0])
    Y = sample_exact(KOLMO, 1.0, x, 200_000, SampleStream(3))
    law = push_forward(KOLMO, 1.0, x)
    se = np.sqrt(np.diag(law.cov) / len(Y))
    assert np.all(np.abs(Y.mean(axis=0) - law.mean) < 4 * se)
    assert np.allclose(np.cov(Y.T), law.cov, rtol=0.02)


def test_streams_reproducible_and_distinct():
    a = sample_exact(KOLMO, 1.0, [0, 0], 5, SampleStream(7, 2))
    b = sample_exact(KOLMO, 1.0, [0, 0], 5, SampleStream(7, 2))
    c = sample_exact(KOLMO, 1.0, [0, 0], 5, SampleStream(7, 3))
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    assert SampleStream(7, 2).child(1) != SampleStream(7, 2)


def test_density_normalised():
    x, t = np.array([0.5, -0.2]), 0.8
    law = push_forward(KOLMO, t, x)
    sd = np.sqrt(np.diag(law.cov))
    lo, hi = law.mean - 9 * sd, law.mean + 9 * sd
    total, _ = integrate.dblquad(lambda y2, y1: density(KOLMO, t, x, [y1, y2]), lo[0], hi[0], lo[1], hi[1],
                                 epsabs=1e-10)
    assert total == pytest.approx(1.0, abs=1e-7)


def test_degenerate_law():
    law = GaussianLaw([0.0, 0.0], [[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(DegenerateLawError):
        law.logpdf([0.0, 0.0])
    R = law.root()
    assert np.allclose(R @ R.T, law.cov)


@pytest.mark.parametrize("kind", ["linear", "quadratic", "expLinear"])
def test_closed_forms_match_quadrature(kind, rng):
    law = push_forward(KFP, 0.7, [0.3, -0.5])
    f = make_test_function(kind, 2, rng)
    closed = expect(law, f, ClosedForm()).value
    assert expect(law, f, GaussHermite(60)).value == pytest.approx(closed, rel=1e-10, abs=1e-12)


def test_halfspace_closed_form_by_sampling(rng):
    # the indicator is discontinuous, so sample instead of using quadrature
    law = push_forward(KFP, 0.7, [0.3, -0.5])
    f = make_test_function("halfspace", 2, rng, shift=0.25)
    est = expect(law, f, MonteCarlo(400_000, SampleStream(9)))
    assert abs(est.value - f.mean(law)) < 4 * est.error


def test_monte_carlo_unbiased(rng):
    law = push_forward(KFP, 1.0, [1.0, 0.0])
    f = make_test_function("expLinear", 2, rng, v=[0.3, -0.2])
    est = expect(law, f, MonteCarlo(400_000, SampleStream(1)))
    assert abs(est.value - f.mean(law)) < 4 * est.error


@pytest.mark.parametrize("kind", ["linear", "quadratic", "expLinear", "logistic", "halfspace"])
def test_gradient_by_finite_differences(kind, rng):
    f = make_test_function(kind, 2, rng)
    method = ClosedForm() if kind != "logistic" else GaussHermite(50)
    x, t, h = np.array([0.2, 0.4]), 0.9, 1e-5
    g = grad_Ptf(KFP, t, x, f, method).value
    fd = [(expectation(KFP, t, x + h * e, f, method).value - expectation(KFP, t, x - h * e, f, method).value)
          / (2 * h) for e in np.eye(2)]
    assert np.allclose(g, fd, rtol=1e-5, atol=1e-7)


def test_power_and_entropy_means(rng):
    law = push_forward(KOLMO, 1.0, [0.1, 0.2])
    f = make_test_function("expLinear", 2, rng, v=[0.5, 0.5])
    assert f.power_mean(law, 2.5) == pytest.approx(expect(law, f.power(2.5), GaussHermite(60)).value, rel=1e-10)
    assert f.xlogx_mean(law) == pytest.approx(expect(law, f.xlogx(), GaussHermite(60)).value, rel=1e-10)


def test_method_validation():
    with pytest.raises(MethodError):
        GaussHermite(100)
    f = make_test_function("logistic", 2)
    with pytest.raises(MethodError):
        expect(push_forward(KOLMO, 1.0, [0, 0]), f, ClosedForm())
    with pytest.raises(ValueError):
        make_test_function("cubic", 2)
    assert math.isfinite(expect(push_forward(KOLMO, 1.0, [0, 0]), f, GaussHermite(20)).value)
