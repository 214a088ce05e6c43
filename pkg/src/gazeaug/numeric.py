"""Deterministic numerical substrate.

Dense matrices are plain C-contiguous float64 numpy arrays; no wrapper
type is introduced. This module owns the pieces the copula and the
mode-specific normalizer are built from: a Cholesky factorization with
an explicit not-positive-definite signal, the standard normal CDF and
its inverse, 1-D Gaussian mixture fitting by EM, multivariate normal
sampling from a Cholesky factor, and a central finite-difference
gradient estimator used as a test oracle elsewhere.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erfc

from .errors import DomainError, InsufficientData, NotPositiveDefinite
from .rng import RngState

VARIANCE_FLOOR = 1e-6
_SQRT2 = np.sqrt(2.0)
_LOG_2PI = np.log(2.0 * np.pi)


def cholesky(sigma: np.ndarray) -> np.ndarray:
    """Lower-triangular Cholesky factor of a symmetric PD matrix.

    Parameters
    ----------
    sigma : (n, n) array
        Symmetric (within 1e-12 relative) positive definite matrix.

    Returns
    -------
    L : (n, n) array
        Lower triangular, strictly-upper entries exactly 0, diagonal > 0,
        with L @ L.T reconstructing sigma.

    Raises
    ------
    NotPositiveDefinite
        If a pivot is <= 0. Callers holding near-singular empirical
        correlation matrices should retry through cholesky_with_jitter.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise DomainError(f"cholesky expects a square matrix, got shape {sigma.shape}")
    scale = np.max(np.abs(sigma)) or 1.0
    if np.max(np.abs(sigma - sigma.T)) > 1e-12 * scale:
        raise DomainError("cholesky expects a symmetric matrix")
    n = sigma.shape[0]
    L = np.zeros((n, n))
    for j in range(n):
        pivot = sigma[j, j] - L[j, :j] @ L[j, :j]
        if pivot <= 0.0:
            raise NotPositiveDefinite(
                f"pivot {pivot:.3e} at index {j}: matrix is not positive definite",
                pivot_index=j,
            )
        L[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            L[j + 1 :, j] = (sigma[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def cholesky_with_jitter(sigma: np.ndarray, jitter: float = 1e-8, retries: int = 3) -> np.ndarray:
    """Cholesky with the documented retry policy for degenerate inputs.

    Adds ``jitter * I`` and retries up to ``retries`` times, doubling the
    jitter each attempt. Raises the final NotPositiveDefinite if all
    attempts fail.
    """
    try:
        return cholesky(sigma)
    except NotPositiveDefinite as err:
        last = err
    sigma = np.asarray(sigma, dtype=np.float64)
    eye = np.eye(sigma.shape[0])
    for attempt in range(retries):
        try:
            return cholesky(sigma + jitter * (2.0**attempt) * eye)
        except NotPositiveDefinite as err:
            last = err
    raise last


def std_normal_cdf(x):
    """Standard normal CDF, accurate to well below 1e-9 absolute.

    Evaluated through the complementary error function so the lower tail
    keeps relative precision: Phi(x) = erfc(-x / sqrt(2)) / 2.
    Accepts scalars or arrays.
    """
    x = np.asarray(x, dtype=np.float64)
    out = 0.5 * erfc(-x / _SQRT2)
    return float(out) if out.ndim == 0 else out


# Acklam's rational approximation to the normal quantile (relative error
# ~1.15e-9), refined below by one Newton step on the CDF.
_ACKLAM_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
             1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_ACKLAM_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
             6.680131188771972e+01, -1.328068155288572e+01)
_ACKLAM_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
             -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_ACKLAM_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
             3.754408661907416e+00)
_ACKLAM_LOW = 0.02425


def _quantile_scalar(p: float) -> float:
    if p < _ACKLAM_LOW:
        q = np.sqrt(-2.0 * np.log(p))
        a, b, c, d, e, f = _ACKLAM_C
        num = ((((a * q + b) * q + c) * q + d) * q + e) * q + f
        den = (((_ACKLAM_D[0] * q + _ACKLAM_D[1]) * q + _ACKLAM_D[2]) * q + _ACKLAM_D[3]) * q + 1.0
        return num / den
    if p > 1.0 - _ACKLAM_LOW:
        return -_quantile_scalar(1.0 - p)
    q = p - 0.5
    r = q * q
    a, b, c, d, e, f = _ACKLAM_A
    num = (((((a * r + b) * r + c) * r + d) * r + e) * r + f) * q
    den = ((((_ACKLAM_B[0] * r + _ACKLAM_B[1]) * r + _ACKLAM_B[2]) * r + _ACKLAM_B[3]) * r
           + _ACKLAM_B[4]) * r + 1.0
    return num / den


def std_normal_quantile(p):
    """Inverse standard normal CDF.

    Rational approximation plus one Newton step on std_normal_cdf, which
    brings |cdf(result) - p| below 1e-9 across (0, 1) without any
    iteration-count nondeterminism.

    Raises
    ------
    DomainError
        For p outside the open interval (0, 1).
    """
    arr = np.asarray(p, dtype=np.float64)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError("quantile domain is the open interval (0, 1)")
    x = np.vectorize(_quantile_scalar, otypes=[np.float64])(arr)
    # One Newton refinement: x -= (Phi(x) - p) / phi(x).
    pdf = np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
    x = x - (0.5 * erfc(-x / _SQRT2) - arr) / pdf
    return float(x) if x.ndim == 0 else x


class GaussianMixture1D:
    """A k-component univariate Gaussian mixture.

    weights lie on the simplex (sum 1 within 1e-12) and every std sits at
    or above the variance floor sqrt(1e-6).
    """

    __slots__ = ("weights", "means", "stds")

    def __init__(self, weights, means, stds):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.means = np.asarray(means, dtype=np.float64)
        self.stds = np.asarray(stds, dtype=np.float64)
        if not (self.weights.shape == self.means.shape == self.stds.shape):
            raise DomainError("mixture parameter arrays must share one shape")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise DomainError("mixture weights must sum to 1")
        if np.any(self.stds < np.sqrt(VARIANCE_FLOOR) * (1 - 1e-12)):
            raise DomainError("mixture stds below the variance floor")

    @property
    def k(self) -> int:
        return self.weights.size

    def log_pdf(self, x) -> np.ndarray:
        """Log density at x (scalar or array)."""
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        z = (x[:, None] - self.means[None, :]) / self.stds[None, :]
        comp = np.log(self.weights)[None, :] - np.log(self.stds)[None, :] \
            - 0.5 * (z * z + _LOG_2PI)
        m = comp.max(axis=1, keepdims=True)
        return (m[:, 0] + np.log(np.exp(comp - m).sum(axis=1)))

    def responsibilities(self, x) -> np.ndarray:
        """Posterior component probabilities per sample, shape (n, k)."""
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        z = (x[:, None] - self.means[None, :]) / self.stds[None, :]
        comp = np.log(self.weights)[None, :] - np.log(self.stds)[None, :] - 0.5 * z * z
        comp -= comp.max(axis=1, keepdims=True)
        r = np.exp(comp)
        return r / r.sum(axis=1, keepdims=True)


def _kmeanspp_centers(samples: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = np.empty(k)
    centers[0] = samples[rng.integers(samples.size)]
    d2 = (samples - centers[0]) ** 2
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            centers[j:] = samples[rng.integers(samples.size, size=k - j)]
            break
        centers[j] = samples[rng.choice(samples.size, p=d2 / total)]
        d2 = np.minimum(d2, (samples - centers[j]) ** 2)
    return centers


def gmm_fit_em(samples, k: int, max_iter: int = 200, tol: float = 1e-7,
               rng: RngState | None = None, return_trace: bool = False):
    """Fit a 1-D Gaussian mixture by expectation-maximization.

    Initialization is k-means++ seeded from ``rng``; variances are
    floored at 1e-6. The per-iteration log-likelihood is non-decreasing
    (within 1e-9) and iteration stops at ``max_iter`` or when the
    log-likelihood improvement drops below ``tol``. With
    ``return_trace`` the per-iteration log-likelihoods are returned
    alongside the mixture.

    Raises
    ------
    InsufficientData
        If fewer samples than components.
    """
    samples = np.asarray(samples, dtype=np.float64).ravel()
    if not np.all(np.isfinite(samples)):
        raise DomainError("gmm_fit_em requires finite samples")
    n = samples.size
    if n < k:
        raise InsufficientData(f"need at least k={k} samples, got {n}")
    gen = (rng or RngState(0)).generator()

    means = _kmeanspp_centers(samples, k, gen)
    spread = samples.std()
    stds = np.full(k, max(spread, np.sqrt(VARIANCE_FLOOR)))
    weights = np.full(k, 1.0 / k)

    trace = []
    prev_ll = -np.inf
    for _ in range(max_iter):
        # E step in log space.
        z = (samples[:, None] - means[None, :]) / stds[None, :]
        logp = np.log(weights)[None, :] - np.log(stds)[None, :] - 0.5 * (z * z + _LOG_2PI)
        m = logp.max(axis=1, keepdims=True)
        lse = m[:, 0] + np.log(np.exp(logp - m).sum(axis=1))
        ll = lse.sum()
        trace.append(ll)
        resp = np.exp(logp - lse[:, None])

        # M step.
        nk = resp.sum(axis=0)
        nk = np.maximum(nk, 1e-300)
        weights = nk / n
        means = (resp * samples[:, None]).sum(axis=0) / nk
        var = (resp * (samples[:, None] - means[None, :]) ** 2).sum(axis=0) / nk
        stds = np.sqrt(np.maximum(var, VARIANCE_FLOOR))

        if ll - prev_ll < tol and np.isfinite(prev_ll):
            break
        prev_ll = ll

    weights = weights / weights.sum()
    model = GaussianMixture1D(weights, means, stds)
    return (model, np.asarray(trace)) if return_trace else model


def sample_mvn(L: np.ndarray, n: int, rng: RngState) -> np.ndarray:
    """Draw n rows from N(0, L @ L.T) given the lower Cholesky factor."""
    if n < 1:
        raise DomainError("sample_mvn requires n >= 1")
    L = np.asarray(L, dtype=np.float64)
    z = rng.generator().standard_normal((n, L.shape[0]))
    return z @ L.T


def finite_diff_grad(f, x, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient estimate of a scalar function.

    Returns (f(x + h e_i) - f(x - h e_i)) / (2h) per coordinate. Used as
    the independent oracle for hand-written backpropagation. The input
    is never mutated; f is called on a private contiguous copy.
    """
    work = np.array(x, dtype=np.float64, copy=True, order="C")
    flat = work.reshape(-1)
    grad = np.empty_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(work)
        flat[i] = orig - h
        fm = f(work)
        flat[i] = orig
        grad[i] = (fp - fm) / (2.0 * h)
    return grad.reshape(work.shape)
