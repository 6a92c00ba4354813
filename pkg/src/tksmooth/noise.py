"""Densities and noise samplers for data generation."""
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DimensionMismatch, NotPositiveDefinite


def _cholesky(R):
    R = np.atleast_2d(np.asarray(R, dtype=float))
    try:
        return np.linalg.cholesky(R)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("scale matrix is not positive definite") from None


@dataclass(frozen=True)
class StudentTParams:
    mean: np.ndarray
    R: np.ndarray
    s: float

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        if R.shape != (mean.size, mean.size):
            raise DimensionMismatch(f"R has shape {R.shape} for a mean of size {mean.size}")
        if not self.s > 0:
            raise ValueError("degrees of freedom must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "R", R)

    @property
    def m(self):
        return self.mean.size


def _mahalanobis_sq(v, mean, L):
    if np.shape(v) != mean.shape:
        raise DimensionMismatch(f"v has shape {np.shape(v)}, expected {mean.shape}")
    u = np.linalg.solve(L, np.asarray(v, dtype=float) - mean)
    return float(u @ u)


def student_t_log_density(v, params):
    """Log of the generalized multivariate Student's t density.

    log G((s+m)/2) - log G(s/2) - 1/2 log det(pi s R) - (s+m)/2 log(1 + |v-mu|^2_{R^-1} / s)
    """
    L = _cholesky(params.R)
    s, m = float(params.s), params.m
    q = _mahalanobis_sq(np.atleast_1d(v), params.mean, L)
    logdet = m * np.log(np.pi * s) + 2.0 * np.sum(np.log(np.diag(L)))
    return float(gammaln((s + m) / 2.0) - gammaln(s / 2.0) - 0.5 * logdet
                 - 0.5 * (s + m) * np.log1p(q / s))


def gaussian_log_density(v, mean, cov):
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    L = _cholesky(cov)
    q = _mahalanobis_sq(np.atleast_1d(v), mean, L)
    m = mean.size
    return float(-0.5 * m * np.log(2.0 * np.pi) - np.sum(np.log(np.diag(L))) - 0.5 * q)


@dataclass(frozen=True)
class ContaminationScheme:
    """Mixture (1 - p) N(0, sigma2) + p * outlier.

    ``kind`` is one of "nominal", "normal" (outlier N(0, phi), phi a variance) or
    "uniform" (outlier U[lo, hi]).
    """

    kind: str = "nominal"
    p: float = 0.0
    phi: float = 100.0
    lo: float = -10.0
    hi: float = 10.0
    sigma2: float = 0.25

    def __post_init__(self):
        if self.kind not in ("nominal", "normal", "uniform"):
            raise ValueError(f"unknown contamination kind {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.kind == "normal" and not self.phi > 0:
            raise ValueError("phi must be positive")
        if self.kind == "uniform" and not self.lo < self.hi:
            raise ValueError("need lo < hi")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")

    @classmethod
    def nominal(cls, sigma2=0.25):
        return cls("nominal", 0.0, sigma2=sigma2)

    @classmethod
    def contaminating_normal(cls, p, phi, sigma2=0.25):
        return cls("normal", p, phi=phi, sigma2=sigma2)

    @classmethod
    def contaminating_uniform(cls, p, lo=-10.0, hi=10.0, sigma2=0.25):
        return cls("uniform", p, lo=lo, hi=hi, sigma2=sigma2)

    @property
    def outlier_rate(self):
        return 0.0 if self.kind == "nominal" else self.p


def as_generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def sample_measurement_noise(scheme, rng, count):
    """Draw ``count`` i.i.d. scalars from the contamination mixture.

    Every scheme consumes the stream identically (selection uniforms, nominal
    normals, outlier draws), so schemes that never select an outlier produce
    the same values as the nominal scheme for the same seed.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    gen = as_generator(rng)
    select = gen.random(count) < scheme.outlier_rate
    out = np.sqrt(scheme.sigma2) * gen.standard_normal(count)
    if scheme.kind == "uniform":
        outliers = gen.uniform(scheme.lo, scheme.hi, count)
    else:
        outliers = np.sqrt(scheme.phi) * gen.standard_normal(count)
    out[select] = outliers[select]
    return out


def sample_gaussian_vector(mean, covariance, rng, size=None):
    """Draw from N(mean, covariance) as mean + L e with L the Cholesky factor."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    L = _cholesky(covariance)
    if L.shape[0] != mean.size:
        raise DimensionMismatch("mean and covariance sizes differ")
    gen = as_generator(rng)
    shape = (mean.size,) if size is None else (size, mean.size)
    e = gen.standard_normal(shape)
    return mean + e @ L.T
