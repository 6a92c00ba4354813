import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from tksmooth.errors import NotPositiveDefinite
from tksmooth.noise import (ContaminationScheme, StudentTParams, gaussian_log_density,
                            sample_gaussian_vector, sample_measurement_noise, student_t_log_density)


def t1(s, mu=0.0, R=1.0):
    return StudentTParams([mu], [[R]], s)


def test_cauchy_at_mode():
    assert student_t_log_density([0.0], t1(1.0)) == pytest.approx(np.log(1 / np.pi), abs=1e-14)


def test_normalizes_by_quadrature():
    p = t1(4.0)
    total, _ = integrate.quad(lambda v: np.exp(student_t_log_density([v], p)), -50, 50,
                              epsabs=1e-12, epsrel=1e-12, limit=200)
    # tail mass beyond |v| = 50 for s = 4 is about 5e-6, so integrate the full line for the check
    full, _ = integrate.quad(lambda v: np.exp(student_t_log_density([v], p)), -np.inf, np.inf,
                             epsabs=1e-13, epsrel=1e-13)
    assert full == pytest.approx(1.0, abs=1e-6)
    assert 1.0 - total == pytest.approx(2 * stats.t.sf(50, 4), abs=1e-8)


@pytest.mark.parametrize("v", [0.0, 1.0, 2.0])
def test_gaussian_limit(v):
    dens = np.exp(student_t_log_density([v], t1(1e6)))
    assert dens == pytest.approx(np.exp(-v * v / 2) / np.sqrt(2 * np.pi), abs=1e-4)


def test_matches_scipy_multivariate_t(rng):
    R = np.array([[2.0, 0.3], [0.3, 0.5]])
    mu = np.array([0.5, -1.0])
    p = StudentTParams(mu, R, 3.5)
    ref = stats.multivariate_t(loc=mu, shape=R, df=3.5)
    for _ in range(5):
        v = rng.standard_normal(2)
        assert student_t_log_density(v, p) == pytest.approx(ref.logpdf(v), rel=1e-12)


def test_gaussian_log_density():
    assert gaussian_log_density([1.0], [0.0], [[1.0]]) == pytest.approx(stats.norm.logpdf(1.0))


def test_density_rejects_bad_scale():
    with pytest.raises(NotPositiveDefinite):
        student_t_log_density([0.0], StudentTParams([0.0], [[-1.0]], 4.0))
    with pytest.raises(ValueError):
        StudentTParams([0.0], [[1.0]], 0.0)


def test_strictly_decreasing_in_distance():
    p = StudentTParams([1.0, 2.0], [[1.0, 0.2], [0.2, 2.0]], 4.0)
    u = np.array([0.6, -0.8])
    vals = [student_t_log_density(p.mean + r * u, p) for r in np.linspace(0, 20, 101)]
    assert np.all(np.diff(vals) < 0)


@settings(max_examples=100, deadline=None)
@given(u=st.lists(st.integers(-2 ** 16, 2 ** 16), min_size=2, max_size=2), s=st.floats(0.1, 100))
def test_symmetric_about_mean(u, s):
    # dyadic offsets keep mean +/- u exact, so the two residuals are exact negatives
    p = StudentTParams([0.25, -3.0], [[1.5, -0.4], [-0.4, 0.7]], s)
    u = np.array(u) / 64.0
    assert student_t_log_density(p.mean + u, p) == student_t_log_density(p.mean - u, p)


def test_nominal_variance():
    x = sample_measurement_noise(ContaminationScheme.nominal(), 1, 100_000)
    assert 0.24 <= x.var() <= 0.26


def test_zero_rate_contamination_equals_nominal():
    a = sample_measurement_noise(ContaminationScheme.nominal(), 9, 1000)
    b = sample_measurement_noise(ContaminationScheme.contaminating_normal(0.0, 100.0), 9, 1000)
    c = sample_measurement_noise(ContaminationScheme.contaminating_uniform(0.0), 9, 1000)
    assert np.array_equal(a, b) and np.array_equal(a, c)


def test_pure_uniform():
    x = sample_measurement_noise(ContaminationScheme.contaminating_uniform(1.0, -10, 10), 3, 100_000)
    assert x.min() >= -10 and x.max() <= 10
    assert abs(x.mean()) <= 0.1


def test_contamination_rate_and_variance():
    x = sample_measurement_noise(ContaminationScheme.contaminating_normal(0.1, 100.0), 5, 200_000)
    # mixture variance 0.9 * 0.25 + 0.1 * 100
    assert x.var() == pytest.approx(10.225, rel=0.03)


def test_samplers_reproducible():
    sc = ContaminationScheme.contaminating_uniform(0.3)
    assert np.array_equal(sample_measurement_noise(sc, 42, 50), sample_measurement_noise(sc, 42, 50))
    a = sample_gaussian_vector([0, 0], np.eye(2), 11)
    assert np.array_equal(a, sample_gaussian_vector([0, 0], np.eye(2), 11))


def test_gaussian_vector_moments():
    x = sample_gaussian_vector([0.0, 0.0], np.eye(2), 4, size=100_000)
    assert np.all(np.abs(np.cov(x.T) - np.eye(2)) <= 0.02)
    y = sample_gaussian_vector([5.0, 5.0], np.eye(2), 8, size=100_000)
    assert np.all(np.abs(y.mean(axis=0) - 5.0) <= 0.02)


def test_gaussian_vector_rejects_non_spd():
    with pytest.raises(NotPositiveDefinite):
        sample_gaussian_vector([0.0], [[0.0]], 1)


def test_scheme_validation():
    with pytest.raises(ValueError):
        ContaminationScheme("normal", 1.5)
    with pytest.raises(ValueError):
        ContaminationScheme("uniform", 0.1, lo=1, hi=-1)
    with pytest.raises(ValueError):
        sample_measurement_noise(ContaminationScheme.nominal(), 0, 0)
