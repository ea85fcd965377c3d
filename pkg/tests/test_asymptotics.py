import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robsparse.asymptotics import (AsymptoticConstants, Normal, StudentT, asymptotic_constants,
                                   oracle_covariance, parse_error_dist)
from robsparse.kernels import C1_DEFAULT, RhoSpec, tune_for_efficiency
from robsparse.simbench import ar_covariance


def test_normal_constants():
    k = asymptotic_constants(error_dist=Normal(1.0))
    assert k.s0 == pytest.approx(1.0, abs=1e-3)
    assert k.efficiency == pytest.approx(0.85, abs=5e-3)
    assert k.a > 0 and k.bconst > 0


def test_scale_follows_sigma():
    assert asymptotic_constants(error_dist=Normal(3.0)).s0 == pytest.approx(3.0, rel=1e-6)
    # the efficiency is scale free
    assert asymptotic_constants(error_dist=Normal(3.0)).efficiency == pytest.approx(0.85, abs=5e-3)


def test_cauchy_constants_are_finite():
    k = asymptotic_constants(error_dist=StudentT(1.0))
    assert np.isfinite([k.s0, k.a, k.bconst]).all()
    assert k.efficiency == np.inf


def test_efficiency_round_trip():
    for eff in (0.7, 0.9, 0.95):
        k = asymptotic_constants(rho1=RhoSpec(tune_for_efficiency(eff)))
        assert k.efficiency == pytest.approx(eff, abs=5e-3)


def test_monte_carlo_sandwich(rng):
    # a = E psi^2(u/s0), bconst = E psi'(u/s0) by simulation under t(3)
    k = asymptotic_constants(error_dist=StudentT(3.0))
    u = rng.standard_t(3, size=2_000_000) / k.s0
    rho1 = RhoSpec(C1_DEFAULT)
    assert k.a == pytest.approx(np.mean(rho1.psi(u) ** 2), rel=0.01)
    assert k.bconst == pytest.approx(np.mean(rho1.psi_prime(u)), rel=0.01)


def test_one_by_one_variance_is_reciprocal_efficiency():
    k = asymptotic_constants()
    v = oracle_covariance(k, [[1.0]])
    assert v.shape == (1, 1)
    assert v[0, 0] == pytest.approx(1 / 0.85, abs=0.01)


def test_identity_gives_scalar_multiple():
    k = asymptotic_constants()
    np.testing.assert_allclose(oracle_covariance(k, np.eye(3)), k.variance_factor * np.eye(3))


def test_scenario_one_block_against_dense_inverse():
    k = asymptotic_constants(error_dist=Normal(3.0))
    Sigma = ar_covariance(8, 0.5)[np.ix_([0, 1, 5], [0, 1, 5])]
    V = oracle_covariance(k, Sigma)
    np.testing.assert_allclose(V, k.variance_factor * np.linalg.inv(Sigma), rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(V, V.T, atol=1e-12)
    assert np.all(np.linalg.eigvalsh(V) > 0)


@given(st.integers(1, 6), st.integers(0, 1000))
def test_output_is_spd(p, seed):
    A = np.random.default_rng(seed).standard_normal((p + 2, p))
    V = oracle_covariance(asymptotic_constants(), A.T @ A + 0.1 * np.eye(p))
    assert np.array_equal(V, V.T)
    assert np.all(np.linalg.eigvalsh(V) > 0)


def test_covariance_errors():
    k = asymptotic_constants()
    with pytest.raises(ValueError):
        oracle_covariance(k, np.ones((2, 3)))
    with pytest.raises(ValueError):
        oracle_covariance(k, [[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(np.linalg.LinAlgError):
        oracle_covariance(k, [[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(ValueError):
        AsymptoticConstants(0.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        asymptotic_constants(b=1.5)


@pytest.mark.parametrize("spec,expected", [
    ("normal", Normal()), ("normal:2.5", Normal(2.5)), ("t3", StudentT(3.0)),
    ("T1", StudentT(1.0)), ("t:4.5", StudentT(4.5)),
])
def test_parse_error_dist(spec, expected):
    assert parse_error_dist(spec) == expected


@pytest.mark.parametrize("bad", ["cauchy", "t", "normal:x", "t:-1"])
def test_parse_error_dist_rejects(bad):
    with pytest.raises(ValueError):
        parse_error_dist(bad)


def test_distribution_validation():
    with pytest.raises(ValueError):
        Normal(0.0)
    assert StudentT(2.0).variance == np.inf
    assert StudentT(4.0).variance == pytest.approx(2.0)
