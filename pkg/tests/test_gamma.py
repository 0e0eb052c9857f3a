import random
from fractions import Fraction

from hypothesis import given
from hypothesis import strategies as st

from gramlab.gamma import (RationalModel, _matmul, apply_L, check_gamma2_identity, curvature_remainder,
                           gamma2_by_definition, gamma2_by_formula, gamma_G, random_psd, random_rational_matrix,
                           random_symmetric)
from gramlab.model import ZooId, zoo_build
from gramlab.polynomial import MultiPoly, random_poly


def test_one_dimensional_example():
    # L = (s^2/2) d^2 + a x d, f = x^2: Gamma_2^g(f) = -4 a g x^2 + 2 g s^2
    a, s, g = Fraction(-3, 2), Fraction(2), Fraction(5, 7)
    m = RationalModel([[a]], [[s]])
    x = MultiPoly.variable(1, 0)
    f = x * x
    expected = x * x * (-4 * a * g) + 2 * g * s * s
    assert gamma2_by_definition(m, [[g]], f) == expected
    assert gamma2_by_formula(m, [[g]], f) == expected


def test_generator_on_quadratic():
    # L(x_2^2) for Kolmogorov = 2 x_1 x_2
    m = RationalModel.from_linear(zoo_build(ZooId("kolmogorov")).underlying)
    x1, x2 = MultiPoly.variable(2, 0), MultiPoly.variable(2, 1)
    assert apply_L(m, x2 * x2) == x1 * x2 * 2
    assert apply_L(m, x1 * x1) == MultiPoly.constant(2, 1)


def test_identity_sweep():
    res = check_gamma2_identity(count=60, seed=3)
    assert res.passed and res.count == 60


def test_remainder_nonnegative_for_psd():
    assert check_gamma2_identity(count=20, seed=5, points=5).negative_remainders == 0


@given(st.integers(0, 10 ** 9))
def test_sign_flip_is_detected(seed):
    rng = random.Random(seed)
    n = 2
    m = RationalModel([[0, 0], [1, 0]], [[1, 0], [0, 0]])
    G = random_symmetric(rng, n)
    f = random_poly(rng, n, 3, 0.6)
    AG = _matmul(m.A, G)
    wrong = curvature_remainder(m, G, f) + gamma_G(AG, f, f)
    right = gamma2_by_formula(m, G, f)
    assert right == gamma2_by_definition(m, G, f)
    if not gamma_G(AG, f, f).is_zero():
        assert wrong != right


def test_irrational_noise_substitute():
    # sigma = sqrt(2) I and sigma' = [[1, 1], [1, -1]] share sigma sigma^T = 2 I
    rng = random.Random(11)
    A = random_rational_matrix(rng, 2)
    m = RationalModel(A, [[1, 1], [1, -1]])
    assert m.Q == ((2, 0), (0, 2))
    f = random_poly(rng, 2, 4, 0.5)
    G = random_psd(rng, 2)
    assert gamma2_by_definition(m, G, f) == gamma2_by_formula(m, G, f)
