"""Exact Gaussian process regression with Cholesky factorisation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .kernels import RbfKernel, gram_matrix

__all__ = [
    "CholeskyError",
    "MeanRecord",
    "Dataset",
    "PredictiveGaussian",
    "jittered_cholesky",
    "log_marginal_likelihood",
    "gp_predict",
    "sample_gp",
    "fit_rbf_baseline",
]

JITTER_LADDER = (0.0, 1e-8, 1e-6, 1e-4)
_LOG_2PI = math.log(2.0 * math.pi)


class CholeskyError(np.linalg.LinAlgError):
    """Covariance matrix could not be factorised even after adding jitter."""


@dataclass(frozen=True)
class MeanRecord:
    """Deterministic mean removed from the targets: ``offset + slope * x``."""

    mode: str = "none"
    offset: float = 0.0
    slope: float = 0.0

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.offset + self.slope * x

    def to_dict(self) -> dict:
        return {"mode": self.mode, "offset": self.offset, "slope": self.slope}

    @classmethod
    def from_dict(cls, d) -> "MeanRecord":
        return cls(d.get("mode", "none"), float(d.get("offset", 0.0)), float(d.get("slope", 0.0)))


@dataclass(frozen=True)
class Dataset:
    """Training inputs and (de-meaned) targets, with the removed mean."""

    x: np.ndarray
    y: np.ndarray
    mean: MeanRecord = field(default_factory=MeanRecord)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if x.shape != y.shape:
            raise ValueError(f"x and y lengths differ ({x.size} vs {y.size})")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("dataset values must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size

    def restored(self) -> np.ndarray:
        """Targets with the removed mean added back."""
        return self.y + self.mean(self.x)


@dataclass
class PredictiveGaussian:
    """Predictive mean with either a full covariance or a variance vector."""

    mean: np.ndarray
    cov: np.ndarray | None = None
    var: np.ndarray | None = None

    def __post_init__(self):
        if self.var is None and self.cov is not None:
            self.var = np.diag(self.cov).copy()
        if self.var is not None:
            self.var = np.maximum(self.var, 0.0)


def jittered_cholesky(K: np.ndarray, ladder=JITTER_LADDER):
    """Lower Cholesky factor of ``K``, escalating diagonal jitter on failure.

    Jitter levels are multiples of the mean diagonal.  Returns ``(L, jitter)``.
    """
    n = K.shape[0]
    if n == 0:
        return np.zeros((0, 0)), 0.0
    scale = float(np.mean(np.diag(K)))
    if not math.isfinite(scale):
        raise CholeskyError("non-finite covariance")
    scale = abs(scale) or 1.0
    for rel in ladder:
        A = K if rel == 0.0 else K + (rel * scale) * np.eye(n)
        try:
            L = linalg.cholesky(A, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(L)):
            return L, rel * scale
    raise CholeskyError(f"Cholesky failed with jitter up to {ladder[-1]:g} x mean diagonal")


def _noisy_factor(kernel, x):
    K = gram_matrix(kernel, x, add_noise=True)
    return jittered_cholesky(K)


def log_marginal_likelihood(kernel, data: Dataset) -> float:
    """``log N(y; 0, K + sigma2 I)`` using the kernel's own ``sigma2``.

    Raises
    ------
    CholeskyError
        When the noisy Gram matrix is not positive definite.
    """
    if data.n == 0:
        return 0.0
    L, _ = _noisy_factor(kernel, data.x)
    a = linalg.solve_triangular(L, data.y, lower=True, check_finite=False)
    return -0.5 * float(a @ a) - float(np.sum(np.log(np.diag(L)))) - 0.5 * data.n * _LOG_2PI


def gp_predict(kernel, data: Dataset, x_star, full_cov: bool = True,
               include_noise: bool = False) -> PredictiveGaussian:
    """Posterior of the latent function (zero prior mean) at ``x_star``.

    The mean is for the de-meaned targets; callers restore the trend.  With
    ``include_noise`` the observation variance ``sigma2`` is added so the
    result describes new observations rather than the latent function.
    """
    x_star = np.asarray(x_star, dtype=float).reshape(-1)
    noise = kernel.sigma2 if include_noise else 0.0
    if data.n == 0:
        Kss = gram_matrix(kernel, x_star)
        if full_cov:
            return PredictiveGaussian(np.zeros(x_star.size), cov=Kss + noise * np.eye(x_star.size))
        return PredictiveGaussian(np.zeros(x_star.size), var=np.diag(Kss) + noise)
    L, _ = _noisy_factor(kernel, data.x)
    Ksx = gram_matrix(kernel, x_star, data.x)
    alpha = linalg.cho_solve((L, True), data.y, check_finite=False)
    mean = Ksx @ alpha
    V = linalg.solve_triangular(L, Ksx.T, lower=True, check_finite=False)
    if full_cov:
        cov = gram_matrix(kernel, x_star) - V.T @ V
        cov = 0.5 * (cov + cov.T)
        if noise:
            cov[np.diag_indices_from(cov)] += noise
        return PredictiveGaussian(mean, cov=cov)
    var = kernel(np.zeros(x_star.size)) - np.einsum("ij,ij->j", V, V) + noise
    return PredictiveGaussian(mean, var=var)


def sample_gp(kernel, x, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw zero-mean GP function values ``L z`` at inputs ``x`` (noise-free)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    L, _ = jittered_cholesky(gram_matrix(kernel, x))
    if size is None:
        return L @ rng.standard_normal(x.size)
    return (L @ rng.standard_normal((x.size, size))).T


def fit_rbf_baseline(data: Dataset, lengthscales=None, noise_ratio: float = 0.01) -> RbfKernel:
    """Squared-exponential GP fitted by a 1-D likelihood grid search over the length scale.

    The noise is tied to the signal variance (``sigma2 = noise_ratio * v``),
    so ``v`` has the closed-form maximiser ``y^T C^-1 y / n`` for the
    correlation matrix ``C = R + noise_ratio I`` and only the length scale
    is searched.  The default grid spans half to ten times the input range
    on a log scale (200 points), floored at the median input spacing.
    """
    x, y, n = data.x, data.y, data.n
    if n < 2:
        raise ValueError("baseline needs at least two training points")
    if lengthscales is None:
        span = float(x.max() - x.min())
        dx = float(np.median(np.diff(np.sort(x))))
        lengthscales = np.logspace(math.log10(max(dx, 1e-3 * span) / 2), math.log10(10 * span), 200)
    best = None
    for ell in np.asarray(lengthscales, dtype=float):
        C = gram_matrix(RbfKernel(ell, 1.0, noise_ratio), x, add_noise=True)
        try:
            L, _ = jittered_cholesky(C)
        except CholeskyError:
            continue
        a = linalg.solve_triangular(L, y, lower=True, check_finite=False)
        v = float(a @ a) / n
        ll = -0.5 * n * math.log(v) - float(np.sum(np.log(np.diag(L))))
        if best is None or ll > best[0]:
            best = (ll, ell, v)
    if best is None:
        raise CholeskyError("no length scale gave a factorisable Gram matrix")
    _, ell, v = best
    return RbfKernel(ell, v, noise_ratio * v)
