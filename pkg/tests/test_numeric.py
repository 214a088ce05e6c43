import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gazeaug.errors import DomainError, InsufficientData, NotPositiveDefinite
from gazeaug.numeric import (
    cholesky,
    cholesky_with_jitter,
    finite_diff_grad,
    gmm_fit_em,
    sample_mvn,
    std_normal_cdf,
    std_normal_quantile,
)
from gazeaug.rng import RngState


def _phi_quadrature(x: float) -> float:
    """High-precision reference CDF by quadrature from -12 to x."""
    from scipy.integrate import quad

    val, _ = quad(lambda t: np.exp(-0.5 * t * t) / np.sqrt(2 * np.pi), -13.0, x,
                  epsabs=1e-13, epsrel=1e-13, limit=400)
    return val


class TestCholesky:
    def test_identity(self):
        assert np.allclose(cholesky(np.eye(3)), np.eye(3))

    def test_fixed_2x2(self):
        L = cholesky(np.array([[4.0, 2.0], [2.0, 3.0]]))
        # derived: multiply back and compare to the input
        assert np.allclose(L @ L.T, [[4, 2], [2, 3]], atol=1e-12)
        assert np.allclose(L, [[2.0, 0.0], [1.0, np.sqrt(2.0)]])

    def test_1x1(self):
        assert np.allclose(cholesky(np.array([[9.0]])), [[3.0]])

    def test_structure(self):
        L = cholesky(np.array([[4.0, 2.0], [2.0, 3.0]]))
        assert L[0, 1] == 0.0
        assert np.all(np.diag(L) > 0)

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefinite) as err:
            cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert err.value.pivot_index == 1

    def test_jitter_retry_recovers(self):
        # rank-deficient: plain cholesky fails, jitter succeeds
        a = np.array([[1.0, 1.0], [1.0, 1.0]])
        with pytest.raises(NotPositiveDefinite):
            cholesky(a)
        L = cholesky_with_jitter(a)
        assert np.allclose(L @ L.T, a, atol=1e-6)

    def test_reconstruction_on_random_pd(self):
        gen = RngState(7).generator()
        for trial in range(100):
            d = int(gen.integers(1, 9))
            a = gen.standard_normal((d, d + 2))
            sigma = a @ a.T + 1e-3 * np.eye(d)
            L = cholesky(sigma)
            err = np.max(np.abs(L @ L.T - sigma))
            assert err <= 1e-10 * max(np.max(np.abs(sigma)), 1.0)


class TestNormalCdf:
    def test_symmetry_at_zero(self):
        assert std_normal_cdf(0.0) == 0.5

    def test_against_quadrature_oracle(self):
        for x in (-8.0, -3.0, -1.0, -0.5, 0.3, 1.0, 1.959964, 4.0):
            assert abs(std_normal_cdf(x) - _phi_quadrature(x)) < 1e-9

    def test_known_value(self):
        assert abs(std_normal_cdf(1.959964) - 0.975) < 1e-6

    def test_lower_tail(self):
        v = std_normal_cdf(-8.0)
        assert 0.0 < v < 1e-14

    def test_monotone(self):
        xs = np.linspace(-10, 10, 2001)
        vals = std_normal_cdf(xs)
        assert np.all(np.diff(vals) >= 0)


class TestNormalQuantile:
    def test_median(self):
        assert abs(std_normal_quantile(0.5)) < 1e-12

    def test_known_value_bisection_oracle(self):
        # oracle: bisect std_normal_cdf to invert p = 0.975
        lo, hi = 0.0, 5.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if std_normal_cdf(mid) < 0.975:
                lo = mid
            else:
                hi = mid
        assert abs(std_normal_quantile(0.975) - lo) < 1e-5
        assert abs(std_normal_quantile(0.975) - 1.959964) < 1e-5

    def test_contract_inverse_error(self):
        for p in (1e-9, 1e-4, 0.2, 0.5, 0.7, 0.999, 1 - 1e-9):
            assert abs(std_normal_cdf(std_normal_quantile(p)) - p) <= 1e-9

    def test_round_trip_fixed_points(self):
        for x in (-3.0, -1.0, 0.0, 1.0, 3.0):
            assert abs(std_normal_quantile(std_normal_cdf(x)) - x) <= 1e-8

    @given(st.floats(min_value=-6.0, max_value=6.0))
    @settings(max_examples=200, deadline=None)
    def test_round_trip_property(self, x):
        assert abs(std_normal_quantile(std_normal_cdf(x)) - x) <= 1e-8

    def test_domain(self):
        for p in (0.0, 1.0, -0.1, 1.1):
            with pytest.raises(DomainError):
                std_normal_quantile(p)


class TestGmmEm:
    def test_degenerate_constant_data(self):
        m = gmm_fit_em(np.full(50, 5.0), k=1, rng=RngState(0))
        assert m.means[0] == pytest.approx(5.0)
        assert m.stds[0] == pytest.approx(np.sqrt(1e-6))

    def test_two_separated_clusters(self):
        gen = RngState(3).generator()
        samples = np.concatenate([gen.normal(0, 0.5, 500), gen.normal(10, 0.5, 500)])
        m = gmm_fit_em(samples, k=2, rng=RngState(1))
        means = np.sort(m.means)
        assert abs(means[0] - 0.0) < 0.1
        assert abs(means[1] - 10.0) < 0.1

    def test_k1_closed_form(self):
        gen = RngState(5).generator()
        samples = gen.normal(2.5, 1.3, 400)
        m = gmm_fit_em(samples, k=1, rng=RngState(2))
        assert m.means[0] == pytest.approx(samples.mean(), abs=1e-9)

    def test_insufficient_data(self):
        with pytest.raises(InsufficientData):
            gmm_fit_em([1.0, 2.0], k=3)

    def test_loglik_monotone_on_random_datasets(self):
        for trial in range(50):
            gen = RngState(100 + trial).generator()
            k = int(gen.integers(1, 5))
            centers = gen.uniform(-20, 20, k)
            samples = np.concatenate(
                [gen.normal(c, gen.uniform(0.3, 2.0), 60) for c in centers]
            )
            _, trace = gmm_fit_em(samples, k=k, max_iter=60, tol=0.0,
                                  rng=RngState(trial), return_trace=True)
            assert np.all(np.diff(trace) >= -1e-9)

    def test_weights_on_simplex(self):
        gen = RngState(9).generator()
        m = gmm_fit_em(gen.normal(0, 1, 300), k=3, rng=RngState(3))
        assert abs(m.weights.sum() - 1.0) <= 1e-12


class TestSampleMvn:
    def test_identity_covariance(self):
        x = sample_mvn(np.eye(2), 10_000, RngState(11))
        cov = np.cov(x, rowvar=False)
        assert abs(cov[0, 1]) < 0.05

    def test_determinism(self):
        a = sample_mvn(np.eye(3), 10, RngState(4))
        b = sample_mvn(np.eye(3), 10, RngState(4))
        assert np.array_equal(a, b)

    def test_near_zero_variance_direction(self):
        L = np.array([[1.0, 0.0], [0.0, 1e-8]])
        x = sample_mvn(L, 1000, RngState(6))
        assert np.max(np.abs(x[:, 1])) < 1e-6

    def test_covariance_recovery(self):
        sigma = np.array([[2.0, 0.8], [0.8, 1.0]])
        x = sample_mvn(cholesky(sigma), 50_000, RngState(8))
        assert np.allclose(np.cov(x, rowvar=False), sigma, atol=0.05)


class TestFiniteDiff:
    def test_quadratic(self):
        g = finite_diff_grad(lambda v: float(v[0] ** 2), np.array([3.0]), h=1e-5)
        assert abs(g[0] - 6.0) < 1e-6

    def test_constant(self):
        g = finite_diff_grad(lambda v: 1.5, np.array([1.0, 2.0, 3.0]))
        assert np.array_equal(g, np.zeros(3))

    def test_sum_of_sines_at_zero(self):
        g = finite_diff_grad(lambda v: float(np.sin(v).sum()), np.zeros(4), h=1e-6)
        assert np.allclose(g, np.ones(4), atol=1e-8)

    def test_input_not_mutated(self):
        x = np.array([1.0, 2.0])
        finite_diff_grad(lambda v: float((v**2).sum()), x)
        assert np.array_equal(x, [1.0, 2.0])
