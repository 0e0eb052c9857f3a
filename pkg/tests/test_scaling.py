import math

import numpy as np
import pytest

from gramlab.model import ModelInputError, Spectrum, ZooId, zoo_build
from gramlab.scaling import (UnreachableError, dissipativity_check, exact_lambda, growth_condition,
                             kolmogorov_small_time_proxy, projected_wang_harnack, quasi_invariance_lp,
                             run_scaling_study, t_k, truncation_error)
from gramlab.semigroup import MonteCarlo, SampleStream, make_test_function

POWER2 = Spectrum("power", 2.0)


def test_t_k_inverts_cubic():
    for k in (10, 100, 1000):
        assert t_k(kolmogorov_small_time_proxy, k ** -2.0) == pytest.approx((12 * k ** 2) ** (1 / 3), rel=1e-10)


def test_t_k_unreachable():
    with pytest.raises(UnreachableError):
        t_k(lambda t: math.log1p(t), 1e-9, t_max=1e3)


def test_growth_slope_with_cubic_proxy():
    res = growth_condition(kolmogorov_small_time_proxy, POWER2, [100, 1000, 10_000, 100_000])
    assert res.verdict == "pass" and res.decreasing
    assert res.slope == pytest.approx(-1 / 3, abs=0.05)
    with pytest.raises(ModelInputError):
        growth_condition(kolmogorov_small_time_proxy, POWER2, [])


def test_flat_counterexample_fails():
    res = growth_condition(lambda t: t, POWER2, [10, 100, 1000], t_max=1e12)
    assert res.verdict == "fail"
    assert res.slope == pytest.approx(1.0, abs=0.05)


def test_dissipativity():
    assert dissipativity_check(zoo_build(ZooId("damped-osc", j=4)))
    assert dissipativity_check(zoo_build(ZooId("coupled-osc", j=3)))
    assert not dissipativity_check(zoo_build(ZooId("kolmogorov")))


def test_truncation_error_bound(rng):
    km = zoo_build(ZooId("damped-osc", j=3), POWER2)
    X0 = rng.normal(size=(3, 8))
    for k in (1, 3, 6):
        exact, bound = truncation_error(km, k, 2.0, X0)
        assert 0 <= exact <= bound
    with pytest.raises(ModelInputError):
        truncation_error(km, 2, 1.0, np.zeros((2, 4)))


def test_quasi_invariance(rng):
    km = zoo_build(ZooId("coupled-osc", j=3), POWER2)
    for k in (1, 2):
        x0 = 0.1 * rng.normal(size=3 * k)
        for p in (1.5, 2.0, 5.0):
            r = quasi_invariance_lp(km, k, 1.0, p, x0)
            assert r.verdict == "pass"
            assert r.extras["log_lhs"] <= r.extras["log_rhs"] + 1e-12
    mc = quasi_invariance_lp(km, 1, 1.0, 2.0, [0.05, 0.0, 0.02], MonteCarlo(400_000, SampleStream(5)))
    closed = quasi_invariance_lp(km, 1, 1.0, 2.0, [0.05, 0.0, 0.02])
    assert abs(mc.lhs - closed.lhs) < 4 * mc.stat_error
    with pytest.raises(ValueError):
        quasi_invariance_lp(km, 1, 1.0, 1.0, np.zeros(3))


def test_projected_wang_harnack(rng):
    km = zoo_build(ZooId("damped-osc", j=3), POWER2)
    X0, Y0 = 0.05 * rng.normal(size=(3, 4)), 0.05 * rng.normal(size=(3, 4))
    f = make_test_function("expLinear", 3 * 2, rng)
    r = projected_wang_harnack(km, 2, 1.5, 2.0, X0, Y0, f)
    assert r.verdict == "pass" and math.isfinite(r.rhs)
    assert r.extras["exponent"] >= r.extras["rho_exponent"] - 1e-12
    far = projected_wang_harnack(km, 2, 1.5, 2.0, 50 * X0, Y0, f)
    assert far.verdict == "pass"


def test_scaling_study_outputs():
    km = zoo_build(ZooId("kolmogorov"), POWER2)
    study = run_scaling_study(km, [10, 100], kolmogorov_small_time_proxy, lambda_source="t^3/12")
    lines = study.to_csv().strip().splitlines()
    assert lines[0] == "k,t_k,tail,product,truncExact,truncBound" and len(lines) == 3
    assert '"lambda_source": "t^3/12"' in study.to_json()


def test_kfp_exponential_lambda_growth_passes():
    km = zoo_build(ZooId("kinetic-fp", gamma=10.0), POWER2)
    res = growth_condition(exact_lambda(km), POWER2,
                           [10, 100, 1000, 10_000])
    assert res.verdict == "pass"
    # t_k grows like log k, so consecutive increments are roughly constant
    steps = np.diff([r.t_k for r in res.records])
    assert steps.max() / steps.min() < 1.2


def test_damped_truncation_vanishes_along_t_k():
    km = zoo_build(ZooId("damped-osc", j=3), POWER2)
    rows = run_scaling_study(km, [10, 100, 1000]).rows()
    exact = [r["truncExact"] for r in rows]
    assert all(a > b for a, b in zip(exact, exact[1:]))
    assert all(r["truncExact"] <= r["truncBound"] for r in rows)
    assert exact[-1] < 2e-3
