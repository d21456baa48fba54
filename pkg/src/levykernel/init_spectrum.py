"""Initialisation of spectral mixtures from the empirical spectrum.

Pipeline: remove a deterministic mean, compute the periodogram, fit a
Gaussian mixture to it (treating the periodogram as a density), refit each
Gaussian bump with a Laplacian bump, then tune the Lévy prior
hyperparameters around the resulting mixture.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import signal, stats

from .gp import MeanRecord
from .kernels import LAPLACIAN, SpectralMixtureKernel
from .levy import (
    GAMMA,
    SYMMETRIC_GAMMA,
    HyperpriorSpec,
    LevyPriorSpec,
    canonical_family,
    exp_integral_e1,
    truncation_error_bound,
)

__all__ = [
    "Periodogram",
    "GaussianMixtureFit",
    "TunedHyperparameters",
    "InitResult",
    "demean",
    "periodogram",
    "count_peaks",
    "fit_gaussian_mixture",
    "fit_laplacian",
    "laplace_refit",
    "tune_hyperparameters",
    "uniform_init",
    "init_from_data",
]

log = logging.getLogger(__name__)


def demean(y, mode: str = "constant", x=None):
    """Remove the sample mean (``constant``) or least-squares line (``linear``).

    Returns ``(centred, MeanRecord)``; the line is fitted against ``x``
    (default: sample index).
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    n = y.size
    if mode == "none":
        return y.copy(), MeanRecord("none")
    if mode == "constant":
        if n < 1:
            raise ValueError("constant de-meaning needs at least one value")
        mu = float(np.mean(y))
        return y - mu, MeanRecord("constant", mu, 0.0)
    if mode == "linear":
        if n < 2:
            raise ValueError("linear de-meaning needs at least two values")
        t = np.arange(n, dtype=float) if x is None else np.asarray(x, dtype=float).reshape(-1)
        A = np.column_stack([np.ones(n), t])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        rec = MeanRecord("linear", float(coef[0]), float(coef[1]))
        return y - rec(t), rec
    raise ValueError(f"unknown de-mean mode {mode!r}")


@dataclass(frozen=True)
class Periodogram:
    """One-sided empirical spectral density on ``floor(n/2)`` uniform bins."""

    freqs: np.ndarray
    power: np.ndarray
    n: int

    @property
    def spacing(self) -> float:
        return float(self.freqs[1] - self.freqs[0]) if self.freqs.size > 1 else 1.0 / self.n

    @property
    def total_power(self) -> float:
        """Integral of the density over the frequency band."""
        return float(np.sum(self.power) * self.spacing)


def periodogram(y, spacing: float = 1.0) -> Periodogram:
    """``S(s) = (2/n) |sum_j y_j exp(-2 pi i s (j-1))|^2`` at ``s_k = (k-1)/n``.

    ``spacing`` is the input sampling interval; frequencies are returned in
    cycles per input unit.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    n = y.size
    if n < 4:
        raise ValueError("periodogram needs at least 4 samples")
    half = n // 2
    Y = np.fft.fft(y)[:half]
    power = 2.0 * np.abs(Y) ** 2 / n
    # the density is per cycle-per-sample; rescale for other spacings
    return Periodogram(np.arange(half) / (n * spacing), power * spacing, n)


def count_peaks(pgram: Periodogram, factor: float = 5.0, cap: int = 10,
                min_separation: int = 3) -> int:
    """Number of local maxima above ``factor`` times the median power (1..cap).

    Maxima closer than ``min_separation`` bins to a taller one are ignored so
    that leakage sidelobes of a single tone are not counted.
    """
    p = pgram.power
    if p.size < 3:
        return 1
    peaks, _ = signal.find_peaks(p, height=factor * np.median(p), distance=min_separation)
    return int(min(max(peaks.size, 1), cap))


@dataclass
class GaussianMixtureFit:
    """Mixture ``sum_j weight_j N(s; mean_j, std_j^2)`` fitted to a spectrum."""

    weight: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    loglik_history: list

    @property
    def n_components(self) -> int:
        return self.weight.size

    def density(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)[..., None]
        return (self.weight * stats.norm.pdf(s, self.mean, self.std)).sum(axis=-1)


def _em_1d(x, J, means, max_iter, tol, var_floor):
    n = x.size
    pi = np.full(J, 1.0 / J)
    mu = np.array(means, dtype=float)
    var = np.full(J, max(np.var(x) / J, var_floor))
    history = []
    prev = -math.inf
    for _ in range(max_iter):
        # E step in log space
        logp = -0.5 * (x[:, None] - mu) ** 2 / var - 0.5 * np.log(2 * math.pi * var) + np.log(pi)
        mx = logp.max(axis=1, keepdims=True)
        lse = mx[:, 0] + np.log(np.exp(logp - mx).sum(axis=1))
        ll = float(lse.sum())
        history.append(ll)
        resp = np.exp(logp - lse[:, None])
        nk = resp.sum(axis=0) + 1e-300
        pi = nk / n
        mu = (resp * x[:, None]).sum(axis=0) / nk
        var = np.maximum((resp * (x[:, None] - mu) ** 2).sum(axis=0) / nk, var_floor)
        if abs(ll - prev) < tol * max(1.0, abs(ll)):
            break
        prev = ll
    logp = -0.5 * (x[:, None] - mu) ** 2 / var - 0.5 * np.log(2 * math.pi * var) + np.log(pi)
    mx = logp.max(axis=1, keepdims=True)
    history.append(float((mx[:, 0] + np.log(np.exp(logp - mx).sum(axis=1))).sum()))
    return pi, mu, var, history


def fit_gaussian_mixture(pgram: Periodogram, J0: int, n_samples: int = 10_000,
                         restarts: int = 5, max_iter: int = 500, tol: float = 1e-8,
                         rng: np.random.Generator | None = None) -> GaussianMixtureFit:
    """Fit a ``J0``-component Gaussian mixture to a periodogram by EM.

    The periodogram is treated as a piecewise-constant density: frequencies
    are resampled in proportion to power and dithered uniformly within
    their bin.  The best of ``restarts`` runs is kept, and weights are
    scaled so they sum to the total spectral power.  Components narrower
    than a tenth of the bin spacing are dropped with a warning.
    """
    if J0 < 1:
        raise ValueError("J0 must be >= 1")
    total = pgram.total_power
    if not total > 0:
        raise ValueError("periodogram has no power")
    rng = np.random.default_rng(0) if rng is None else rng
    d = pgram.spacing
    p = pgram.power / pgram.power.sum()
    idx = rng.choice(p.size, size=n_samples, p=p)
    x = pgram.freqs[idx] + d * (rng.random(n_samples) - 0.5)
    var_floor = (d / 100.0) ** 2
    best = None
    for r in range(restarts):
        if r == 0:
            # deterministic start at evenly spaced quantiles
            start = np.quantile(x, (np.arange(J0) + 0.5) / J0)
        else:
            start = rng.choice(x, size=J0, replace=False)
        pi, mu, var, hist = _em_1d(x, J0, start, max_iter, tol, var_floor)
        if best is None or hist[-1] > best[3][-1]:
            best = (pi, mu, var, hist)
    pi, mu, var, hist = best
    std = np.sqrt(var)
    keep = std >= d / 10.0
    if not keep.all():
        warnings.warn(f"dropping {int((~keep).sum())} degenerate mixture component(s)")
    if not keep.any():
        raise ValueError("all mixture components degenerate")
    pi = pi[keep] / pi[keep].sum()
    order = np.argsort(mu[keep])
    return GaussianMixtureFit(
        (pi * total)[order], mu[keep][order], std[keep][order], hist
    )


def _golden(f, lo, hi, tol=1e-12, max_iter=200):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def fit_laplacian(s, target, lam_bounds):
    """Least-squares fit of ``beta (lam/2) exp(-lam |s|)`` to ``target`` on grid ``s``.

    ``beta`` is solved in closed form for each ``lam``; ``log lam`` is found
    by a coarse scan followed by golden-section search inside
    ``lam_bounds``.  Returns ``(beta, lam)``.
    """
    s = np.abs(np.asarray(s, dtype=float))
    t = np.asarray(target, dtype=float)

    def solve(loglam):
        lam = math.exp(loglam)
        phi = 0.5 * lam * np.exp(-lam * s)
        denom = float(phi @ phi)
        beta = float(phi @ t) / denom if denom > 0 else 0.0
        r = beta * phi - t
        return float(r @ r), beta

    lo, hi = math.log(lam_bounds[0]), math.log(lam_bounds[1])
    grid = np.linspace(lo, hi, 121)
    vals = [solve(g)[0] for g in grid]
    i = int(np.argmin(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    loglam = _golden(lambda g: solve(g)[0], a, b)
    return solve(loglam)[1], math.exp(loglam)


def laplace_refit(weight: float, std: float, n_grid: int = 201):
    """Laplacian ``(beta, lam)`` matching ``weight * N(s; 0, std^2)`` on ``[-3 std, 3 std]``."""
    if not (weight > 0 and std > 0):
        raise ValueError("weight and std must be positive")
    s = np.linspace(-3.0 * std, 3.0 * std, n_grid)
    target = weight * stats.norm.pdf(s, 0.0, std)
    return fit_laplacian(s, target, (0.01 / std, 100.0 / std))


@dataclass(frozen=True)
class TunedHyperparameters:
    a_lambda: float
    b_lambda: float
    eta: float
    gamma: float
    gamma_range: tuple
    alpha: float
    epsilon: float

    def prior_spec(self, family: str, f_max: float = 0.5) -> LevyPriorSpec:
        return LevyPriorSpec(
            family=family, gamma=self.gamma, eta=self.eta, alpha=self.alpha,
            epsilon=self.epsilon, f_max=f_max, a_lambda=self.a_lambda, b_lambda=self.b_lambda,
        )

    def hyperprior(self) -> HyperpriorSpec:
        # Gamma(2, 2/x) has mean x: centred on the tuned values
        return HyperpriorSpec(a_gamma=2.0, b_gamma=2.0 / self.gamma, a_eta=2.0, b_eta=2.0 * self.eta)


def _rate_per_gamma(family, eps, alpha):
    if family == GAMMA:
        return exp_integral_e1(eps)
    if family == SYMMETRIC_GAMMA:
        return 2.0 * exp_integral_e1(eps)
    return (2.0 / math.pi) * math.gamma(alpha) * math.sin(0.5 * math.pi * alpha) * eps ** (-alpha)


def tune_hyperparameters(kernel: SpectralMixtureKernel, y, family: str = SYMMETRIC_GAMMA,
                         error_fraction: float = 0.01, count_factor: float = 2.0) -> TunedHyperparameters:
    """Choose Lévy prior hyperparameters around an initial mixture.

    * ``(a_lambda, b_lambda)``: Gamma maximum likelihood on the inverse scales;
    * ``eta``: ``1/var(y)``, so typical weights stay below the data variance;
    * ``gamma``: expected component count ``count_factor * J0``;
    * ``alpha``: Pareto maximum likelihood on ``|beta|``;
    * ``epsilon``: largest truncation whose L2 error bound is at most
      ``error_fraction * var(y)``.
    """
    family = canonical_family(family)
    J0 = kernel.n_components
    if J0 < 1:
        raise ValueError("initial mixture must have at least one component")
    var_y = float(np.var(np.asarray(y, dtype=float)))
    if not var_y > 0:
        raise ValueError("data variance must be positive")
    lam = kernel.lam
    if J0 == 1 or np.ptp(lam) <= 1e-12 * lam.mean():
        warnings.warn("inverse-scale MLE ill-posed; using shape 2, rate 2/mean")
        a_lam, b_lam = 2.0, 2.0 / float(lam.mean())
    else:
        a_lam, _, scale = stats.gamma.fit(lam, floc=0.0)
        a_lam, b_lam = float(a_lam), 1.0 / float(scale)
    eta = 1.0 / var_y

    absb = np.abs(kernel.beta)
    logs = np.log(absb / absb.min())
    if J0 > 1 and logs.sum() > 0:
        alpha = float(np.clip((J0 - 1) / logs.sum(), 0.05, 1.95))
    else:
        alpha = 1.0

    target_count = count_factor * J0
    basis_norm = (a_lam / b_lam) / 4.0  # squared L2 norm of a Laplacian bump at the mean lam

    def bound(eps):
        g = target_count / _rate_per_gamma(family, eps, alpha)
        spec = LevyPriorSpec(family=family, gamma=g, eta=eta, alpha=alpha, epsilon=eps)
        return truncation_error_bound(spec, basis_norm)

    limit = error_fraction * var_y
    grid = np.logspace(-12, 1, 131)
    ok = [e for e in grid if bound(e) <= limit]
    if not ok:
        eps = grid[0]
    else:
        lo = max(ok)
        hi = lo * 10 ** 0.1
        if bound(hi) <= limit:
            eps = hi
        else:
            for _ in range(60):
                mid = math.sqrt(lo * hi)
                if bound(mid) <= limit:
                    lo = mid
                else:
                    hi = mid
            eps = lo
    gamma = target_count / _rate_per_gamma(family, eps, alpha)
    return TunedHyperparameters(a_lam, b_lam, eta, gamma, (0.5 * gamma, 2.0 * gamma), alpha, eps)


def uniform_init(f_max: float = 0.5, J: int = 10, variance: float = 1.0,
                 sigma2: float = 0.1) -> SpectralMixtureKernel:
    """Broad covering of the band: ``J`` equal bumps, centres evenly spaced in (0, f_max)."""
    chi = f_max * np.arange(1, J + 1) / (J + 1)
    return SpectralMixtureKernel.from_arrays(
        np.full(J, variance / J), chi, np.full(J, 20.0 / f_max), LAPLACIAN, sigma2
    )


@dataclass
class InitResult:
    kernel: SpectralMixtureKernel
    spec: LevyPriorSpec
    hyper: TunedHyperparameters
    periodogram: Periodogram
    mixture: GaussianMixtureFit | None
    mean: MeanRecord
    y: np.ndarray


def noise_floor(pgram: Periodogram, var_y: float) -> float:
    """White-noise variance implied by the median periodogram power."""
    # an exponential power has median mean*ln2 and the one-sided density is 2 sigma^2
    step = 1.0 / (pgram.n * pgram.spacing)  # input sampling interval
    est = float(np.median(pgram.power)) / (2.0 * math.log(2.0)) / step
    return max(est, 1e-4 * var_y)


def init_from_data(y, x=None, mode: str = "constant", J0: int | None = None,
                   family: str = SYMMETRIC_GAMMA, uniform: bool = False,
                   rng: np.random.Generator | None = None, spacing: float | None = None,
                   f_max: float | None = None) -> InitResult:
    """Full initialisation: de-mean, periodogram, mixture fit, Laplacian refit, tuning.

    With ``uniform=True`` the spectral fit is replaced by :func:`uniform_init`
    (the prior is still tuned against the empirical spectrum).  ``f_max``
    band-limits both the mixture fit and the prior frequency range; the noise
    floor is still read from the full periodogram.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if spacing is None:
        spacing = 1.0
        if x is not None and len(x) > 1:
            spacing = float(np.median(np.diff(np.asarray(x, dtype=float))))
    yc, rec = demean(y, mode, x)
    pg = periodogram(yc, spacing)
    var_y = float(np.var(yc))
    nyquist = 0.5 / spacing
    f_max = nyquist if f_max is None else min(float(f_max), nyquist)
    band = pg
    if f_max < nyquist:
        keep = pg.freqs <= f_max
        if keep.sum() < 4:
            raise ValueError(f"f_max={f_max} leaves fewer than 4 periodogram bins")
        band = Periodogram(pg.freqs[keep], pg.power[keep], pg.n)
    J0 = count_peaks(band) if J0 is None else int(J0)
    gmm = fit_gaussian_mixture(band, J0, rng=rng)
    betas, chis, lams = [], [], []
    for w, mu, sd in zip(gmm.weight, gmm.mean, gmm.std):
        b, l = laplace_refit(w, sd)
        betas.append(b)
        chis.append(float(np.clip(mu, 0.0, f_max)))
        lams.append(l)
    sigma2 = noise_floor(pg, var_y)
    fitted = SpectralMixtureKernel.from_arrays(betas, chis, lams, LAPLACIAN, sigma2)
    hyper = tune_hyperparameters(fitted, yc, family)
    spec = hyper.prior_spec(family, f_max)
    kernel = uniform_init(f_max, 10, var_y, sigma2) if uniform else fitted
    # lift weights that fall below the truncation to 10% above it
    floor = 1.1 * spec.beta_min
    beta = np.where(np.abs(kernel.beta) > spec.beta_min, kernel.beta,
                    np.sign(kernel.beta) * floor + (kernel.beta == 0) * floor)
    kernel = SpectralMixtureKernel.from_arrays(beta, kernel.chi, kernel.lam, LAPLACIAN, sigma2)
    return InitResult(kernel, spec, hyper, pg, gmm, rec, yc)
