import math
import warnings

import numpy as np
import pytest

from gramlab.model import (KroneckerModel, LinearModel, ModelInputError, Spectrum, ZooId, check_kalman,
                           default_zoo, dump_model, kalman_matrix, lift_kronecker, load_model, model_from_dict,
                           parse_zoo, zoo_build)


def test_kalman_examples():
    kolmo = LinearModel([[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]])
    assert check_kalman(kolmo)
    assert np.allclose(kalman_matrix(kolmo), [[1, 0, 0, 0], [0, 0, 1, 0]])
    assert not check_kalman(LinearModel(np.zeros((2, 2)), [[1.0, 0.0], [0.0, 0.0]]))
    # the noise must reach the second coordinate through the drift
    assert not check_kalman(LinearModel([[0.0, 1.0], [0.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]))


@pytest.mark.parametrize("zid", default_zoo(), ids=lambda z: z.label())
def test_zoo_hypoelliptic(zid):
    km = zoo_build(zid)
    assert check_kalman(km)
    assert np.linalg.matrix_rank(km.sigma_bar) < km.j


@pytest.mark.parametrize("k", [1, 2, 3])
def test_lift_structure_and_kalman(k):
    km = zoo_build(ZooId("coupled-osc", j=3), Spectrum("power", 2.0))
    m = lift_kronecker(km, k)
    alpha = km.spectrum.alphas(k)
    assert m.n == 3 * k
    assert np.allclose(m.A, np.kron(km.A_bar, np.eye(k)))
    assert np.allclose(m.Q, np.kron(km.sigma_bar @ km.sigma_bar.T, np.diag(alpha)))
    assert check_kalman(m) == check_kalman(km)


def test_kfp_matrices():
    km = zoo_build(ZooId("kinetic-fp", gamma=3.0))
    assert np.allclose(km.A_bar, [[0, 1], [-1, -3]])
    assert np.allclose(km.sigma_bar @ km.sigma_bar.T, [[0, 0], [0, 3]])


def test_zoo_validation():
    with pytest.raises(ModelInputError):
        ZooId("kinetic-fp", gamma=2.0)
    with pytest.raises(ModelInputError):
        ZooId("damped-osc", j=2)
    with pytest.raises(ModelInputError):
        ZooId("nonexistent")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ZooId("kinetic-fp", gamma=2.0005)
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)
    assert parse_zoo("kinetic-fp:gamma=3") == ZooId("kinetic-fp", gamma=3.0)


def test_power_tail_against_sum():
    s = Spectrum("power", 2.0)
    # head by summation, remainder beyond 10^6 by the integral with midpoint correction
    head = math.fsum(1.0 / l ** 2 for l in range(11, 1_000_001))
    assert s.tail(10) == pytest.approx(head + 1.0 / (1_000_000.5), rel=1e-12)
    assert s.tail(0) == pytest.approx(math.pi ** 2 / 6, rel=1e-14)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_polylog_tail_consistent(p):
    s = Spectrum("polylog", p)
    ls = np.arange(11, 200_001, dtype=float)
    brute = math.fsum(1.0 / (ls * np.log(ls + 1) ** p))
    assert s.tail(10) == pytest.approx(brute + s.tail(200_000), rel=1e-9)
    lo, hi = s.tail_bracket(10)
    assert lo <= s.tail(10) <= hi


def test_spectrum_parse_and_errors():
    assert Spectrum.parse("explicit:1,0.25").alphas(2).tolist() == [1.0, 0.25]
    assert Spectrum.parse("power:3").alpha(2) == pytest.approx(1 / 8)
    with pytest.raises(ModelInputError):
        Spectrum("power", 1.0)
    with pytest.raises(ModelInputError):
        Spectrum.parse("geometric:2")
    with pytest.raises(ModelInputError):
        Spectrum.parse("explicit:1").alphas(2)


def test_model_file_roundtrip(tmp_path):
    spec = model_from_dict({"name": "damped-osc", "j": 4, "spectrum": {"kind": "power", "p": 2}, "k": 2})
    path = tmp_path / "m.json"
    dump_model(spec, str(path))
    back = load_model(str(path))
    assert np.array_equal(back.linear.A, spec.linear.A)
    assert np.array_equal(back.linear.sigma, spec.linear.sigma)
    raw = model_from_dict({"A": [[0, 0], [1, 0]], "sigma": [[1, 0], [0, 0]]})
    assert raw.kronecker is None and raw.linear.n == 2
    with pytest.raises(ModelInputError):
        model_from_dict({"A": [[0, 0], [1, 0]]})
    assert isinstance(load_model("kolmogorov").kronecker, KroneckerModel)
