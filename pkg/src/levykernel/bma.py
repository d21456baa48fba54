"""Bayesian model averaging of GP predictives over posterior kernel samples."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .gp import CholeskyError, Dataset, gp_predict
from .ski import CGConvergenceError, SkiConfig, SkiPredictor

__all__ = ["PredictiveSummary", "bma_predict", "mixture_moments", "credible_bands"]


@dataclass
class PredictiveSummary:
    """Pointwise summary of a Gaussian-mixture predictive.

    Attributes
    ----------
    x_star : ndarray, shape (n,)
    mean, var : ndarray, shape (n,)
        Mixture mean and total variance (trend restored in ``mean``).
    sample_means, sample_vars : ndarray, shape (H, n) or None
        Per-sample Gaussian components; needed for :func:`credible_bands`.
    bands : dict
        ``level -> (lower, upper)`` for levels computed so far.
    """

    x_star: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    sample_means: np.ndarray | None = None
    sample_vars: np.ndarray | None = None
    bands: dict = field(default_factory=dict)
    skipped: int = 0

    @property
    def n_samples(self) -> int:
        return 0 if self.sample_means is None else self.sample_means.shape[0]

    def add_band(self, level: float) -> tuple:
        if level not in self.bands:
            self.bands[level] = credible_bands(self, level)
        return self.bands[level]

    def write_csv(self, path, levels=(0.95,), header_line: str | None = None) -> None:
        """CSV with columns ``x_star, mean, var`` then ``lo<pct>, hi<pct>`` per level."""
        cols = [self.x_star, self.mean, self.var]
        names = ["x_star", "mean", "var"]
        for lev in levels:
            lo, hi = self.add_band(lev)
            tag = f"{100 * lev:g}".replace(".", "_")
            names += [f"lo{tag}", f"hi{tag}"]
            cols += [lo, hi]
        with open(path, "w", newline="") as fh:
            if header_line:
                fh.write(header_line.rstrip("\n") + "\n")
            w = csv.writer(fh)
            w.writerow(names)
            for row in zip(*cols):
                w.writerow([repr(float(v)) for v in row])


def mixture_moments(means, variances):
    """Mean and total variance of an equally weighted Gaussian mixture (axis 0)."""
    means = np.asarray(means, dtype=float)
    variances = np.asarray(variances, dtype=float)
    mu = means.mean(axis=0)
    # within + between form of mean(var + mean^2) - mu^2, free of cancellation
    total = variances.mean(axis=0) + ((means - mu) ** 2).mean(axis=0)
    return mu, total


def bma_predict(samples, data: Dataset, x_star, backend: str = "exact",
                include_noise: bool = True, ski: SkiConfig | None = None) -> PredictiveSummary:
    """Average the per-sample GP predictives at ``x_star``.

    Each sample contributes a Gaussian with its own mean and variance
    (including its noise variance when ``include_noise``).  Samples whose
    predictive fails are skipped with a warning.

    Parameters
    ----------
    samples : PosteriorSampleSet or sequence of kernels
    data : Dataset
        De-meaned training data; ``data.mean`` is added back to the output.
    backend : {"exact", "ski"}
    """
    x_star = np.asarray(x_star, dtype=float).reshape(-1)
    kernels = [getattr(s, "kernel", s) for s in samples]
    if not kernels:
        raise ValueError("no posterior samples")
    if backend not in ("exact", "ski"):
        raise ValueError(f"unknown backend {backend!r}")
    trend = data.mean(x_star)
    means, variances = [], []
    skipped = 0
    grid = None
    if backend == "ski":
        ski = ski or SkiConfig()
        grid = ski.grid_for(np.concatenate([data.x, x_star]))
    for k in kernels:
        try:
            if backend == "exact":
                p = gp_predict(k, data, x_star, full_cov=False, include_noise=include_noise)
                m, v = p.mean, p.var
            else:
                pred = SkiPredictor(k, data, ski, grid=grid)
                m = pred.mean(x_star)
                v = pred.variance(x_star) + (k.sigma2 if include_noise else 0.0)
        except (CholeskyError, CGConvergenceError, np.linalg.LinAlgError) as exc:
            skipped += 1
            warnings.warn(f"skipping posterior sample: {exc}")
            continue
        if not (np.all(np.isfinite(m)) and np.all(np.isfinite(v))):
            skipped += 1
            warnings.warn("skipping posterior sample with non-finite predictive")
            continue
        means.append(m + trend)
        variances.append(v)
    if not means:
        raise RuntimeError("all posterior samples failed to produce a predictive")
    M = np.array(means)
    V = np.array(variances)
    mu, total = mixture_moments(M, V)
    return PredictiveSummary(x_star, mu, total, M, V, skipped=skipped)


def _mixture_cdf(q, M, S):
    return special.ndtr((q - M) / S).mean(axis=0)


def _mixture_quantile(p, M, S, iters=200):
    # vectorised bisection; the bracket is wide enough to contain every component's mass
    lo = (M - 40.0 * S).min(axis=0)
    hi = (M + 40.0 * S).max(axis=0)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = _mixture_cdf(mid, M, S) < p
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(mid))):
            break
    return 0.5 * (lo + hi)


def credible_bands(summary: PredictiveSummary, level: float = 0.95):
    """Equal-tailed bands of the per-point Gaussian mixture.

    The ``(1 - level)/2`` and ``(1 + level)/2`` quantiles of the mixture CDF
    are found by bisection at every point.
    """
    if not (0.0 < level < 1.0) or not math.isfinite(level):
        raise ValueError(f"level must lie in (0, 1), got {level}")
    if summary.sample_means is None or summary.sample_vars is None:
        raise ValueError("summary does not retain per-sample components")
    M = summary.sample_means
    S = np.sqrt(np.maximum(summary.sample_vars, 1e-300))
    a = 0.5 * (1.0 - level)
    lower = _mixture_quantile(a, M, S)
    upper = _mixture_quantile(1.0 - a, M, S)
    return lower, upper
