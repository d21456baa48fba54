"""Lévy process priors over spectral mixtures.

The mixture is a truncated compound Poisson draw: the component count is
Poisson with rate ``nu`` (the Lévy measure of jumps with ``|beta| eta > eps``),
weights are i.i.d. from the truncated jump density ``pi_beta``, centres are
uniform on ``[0, f_max]`` and inverse scales are Gamma(a_lambda, b_lambda).

Three Lévy families are supported:

=================  ======================================  ==================================
family             rate ``nu``                             weight density ``pi_beta``
=================  ======================================  ==================================
gamma              ``gamma |Omega| E1(eps)``               ``b^-1 e^(-b eta) / E1(eps)``, b>eps/eta
symmetric_gamma    ``2 gamma |Omega| E1(eps)``             ``|b|^-1 e^(-|b| eta) / (2 E1(eps))``
alpha_stable       ``gamma |Omega| (2/pi) G(a) sin(pi a/2) eps^-a``   ``a eps^a / (2 eta^a) |b|^(-a-1)``
=================  ======================================  ==================================
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy import special

from .kernels import LAPLACIAN, SpectralMixtureKernel

__all__ = [
    "GAMMA",
    "SYMMETRIC_GAMMA",
    "ALPHA_STABLE",
    "FAMILIES",
    "LevyPriorSpec",
    "HyperpriorSpec",
    "exp_integral_e1",
    "truncated_rate",
    "beta_magnitude_quantile",
    "sample_beta",
    "sample_prior",
    "log_beta_density",
    "log_prior",
    "truncation_error_bound",
]

GAMMA = "gamma"
SYMMETRIC_GAMMA = "symmetric_gamma"
ALPHA_STABLE = "alpha_stable"
FAMILIES = (GAMMA, SYMMETRIC_GAMMA, ALPHA_STABLE)

_FAMILY_ALIASES = {
    "gamma": GAMMA,
    "symmetricgamma": SYMMETRIC_GAMMA,
    "symmetric_gamma": SYMMETRIC_GAMMA,
    "alphastable": ALPHA_STABLE,
    "alpha_stable": ALPHA_STABLE,
    "stable": ALPHA_STABLE,
}


def canonical_family(name: str) -> str:
    key = name.strip().lower().replace("-", "_")
    if key not in _FAMILY_ALIASES:
        raise ValueError(f"unknown Levy family {name!r}")
    return _FAMILY_ALIASES[key]


@dataclass(frozen=True)
class LevyPriorSpec:
    """Lévy family, truncation and mark priors.

    Parameters
    ----------
    family : str
        One of ``gamma``, ``symmetric_gamma``, ``alpha_stable``.
    gamma : float
        Rate scale; controls the expected number of components.
    eta : float
        Jump decay; ``1/eta`` sets the typical weight magnitude.
    alpha : float
        Stable index in (0, 2); used by ``alpha_stable`` only.
    epsilon : float
        Truncation level; only jumps with ``|beta| eta > epsilon`` are kept.
    f_max : float
        Upper limit of the uniform prior on component centres.
    a_lambda, b_lambda : float
        Shape and rate of the Gamma prior on inverse scales.
    omega_measure : float
        Domain measure ``|Omega|``; kept at 1 so that ``gamma`` alone sets
        the component count.
    chi_min : float
        Lower limit of the centre prior (0 for spectral use; input-space
        regression places centres on ``[min x, max x]``).
    """

    family: str = SYMMETRIC_GAMMA
    gamma: float = 1.0
    eta: float = 1.0
    alpha: float = 1.0
    epsilon: float = 0.1
    f_max: float = 0.5
    a_lambda: float = 2.0
    b_lambda: float = 0.05
    omega_measure: float = 1.0
    chi_min: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "family", canonical_family(self.family))
        for name in ("gamma", "eta", "epsilon", "a_lambda", "b_lambda", "omega_measure"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v}")
        if not (math.isfinite(self.f_max) and self.f_max > self.chi_min):
            raise ValueError(f"f_max must exceed chi_min, got {self.f_max}")
        if self.family == ALPHA_STABLE and not (0.0 < self.alpha < 2.0):
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")

    @property
    def symmetric(self) -> bool:
        return self.family != GAMMA

    @property
    def beta_min(self) -> float:
        """Smallest admissible weight magnitude ``epsilon / eta``."""
        return self.epsilon / self.eta

    @property
    def rate(self) -> float:
        return truncated_rate(self)

    def replace(self, **changes) -> "LevyPriorSpec":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class HyperpriorSpec:
    """Gamma hyperpriors: ``gamma ~ Gamma(a_gamma, b_gamma)``, ``1/eta ~ Gamma(a_eta, b_eta)``.

    ``alpha/2`` receives a Beta(a_alpha, b_alpha) prior.
    """

    a_gamma: float = 2.0
    b_gamma: float = 1.0
    a_eta: float = 2.0
    b_eta: float = 1.0
    a_alpha: float = 2.0
    b_alpha: float = 2.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{k} must be finite and > 0, got {v}")

    def log_density(self, spec: LevyPriorSpec) -> float:
        """Log hyperprior density of ``(gamma, 1/eta[, alpha/2])`` in ``spec``."""
        lp = _log_gamma_pdf(spec.gamma, self.a_gamma, self.b_gamma)
        lp += _log_gamma_pdf(1.0 / spec.eta, self.a_eta, self.b_eta)
        if spec.family == ALPHA_STABLE:
            h = 0.5 * spec.alpha
            lp += (
                (self.a_alpha - 1) * math.log(h)
                + (self.b_alpha - 1) * math.log1p(-h)
                - special.betaln(self.a_alpha, self.b_alpha)
            )
        return lp


def _log_gamma_pdf(x, a, b):
    if x <= 0:
        return -math.inf
    return a * math.log(b) - math.lgamma(a) + (a - 1) * math.log(x) - b * x


def exp_integral_e1(z):
    """Exponential integral ``E1(z) = int_z^inf exp(-t)/t dt`` for ``z > 0``."""
    z_arr = np.asarray(z, dtype=float)
    if np.any(~(z_arr > 0)):
        raise ValueError("E1(z) requires z > 0")
    out = special.exp1(z_arr)
    return float(out) if out.ndim == 0 else out


def truncated_rate(spec: LevyPriorSpec) -> float:
    """Expected component count ``nu`` of the truncated compound Poisson prior."""
    g = spec.gamma * spec.omega_measure
    if spec.family == GAMMA:
        return g * exp_integral_e1(spec.epsilon)
    if spec.family == SYMMETRIC_GAMMA:
        return 2.0 * g * exp_integral_e1(spec.epsilon)
    a = spec.alpha
    return g * (2.0 / math.pi) * math.gamma(a) * math.sin(0.5 * math.pi * a) * spec.epsilon ** (-a)


def _gamma_tail_inverse(v, eps, tol=1e-12):
    """Solve ``E1(u) = v E1(eps)`` for ``u >= eps``.

    Newton iterations on ``log E1(exp(x)) = log target`` in ``x = log u``,
    safeguarded by a bisection bracket.  Small inputs go through a scalar
    loop, which is cheaper than array overhead for a handful of jumps.
    """
    v = np.asarray(v, dtype=float)
    if v.size <= 16:
        out = np.array([_gamma_tail_inverse_scalar(float(t), eps, tol) for t in v.reshape(-1)])
        return out.reshape(v.shape)
    log_t = np.log(v) + math.log(special.exp1(eps))
    lo = np.full(v.shape, math.log(eps))
    hi = np.full(v.shape, math.log(max(eps, 1.0)) + 1.0)
    # E1 is decreasing: grow hi until the root is bracketed
    while True:
        short = np.log(special.exp1(np.exp(hi))) > log_t
        if not short.any():
            break
        hi = np.where(short, hi + 1.0, hi)
    x = 0.5 * (lo + hi)
    for _ in range(200):
        u = np.exp(x)
        e1 = special.exp1(u)
        f = np.log(e1) - log_t
        right = f > 0
        lo = np.where(right, x, lo)
        hi = np.where(right, hi, x)
        # d/dx log E1(e^x) = -e^{-u} / E1(u)
        new = x + f * e1 * np.exp(u)
        new = np.where((new > lo) & (new < hi), new, 0.5 * (lo + hi))
        done = np.all(np.abs(new - x) <= tol)
        x = new
        if done:
            break
    return np.exp(x)


def _gamma_tail_inverse_scalar(v, eps, tol):
    e1 = special.exp1
    log_t = math.log(v) + math.log(e1(eps))
    lo = math.log(eps)
    hi = math.log(max(eps, 1.0)) + 1.0
    while math.log(e1(math.exp(hi))) > log_t:
        hi += 1.0
    x = 0.5 * (lo + hi)
    for _ in range(200):
        u = math.exp(x)
        ev = e1(u)
        f = math.log(ev) - log_t
        if f > 0:
            lo = x
        else:
            hi = x
        new = x + f * ev * math.exp(u)
        if not lo < new < hi:
            new = 0.5 * (lo + hi)
        if abs(new - x) <= tol:
            return math.exp(new)
        x = new
    return math.exp(x)


def beta_magnitude_quantile(u, spec: LevyPriorSpec):
    """Map upper-tail probabilities ``u`` in (0, 1] to weight magnitudes.

    Gamma-type families solve ``E1(|beta| eta) = u E1(eps)``; the stable
    family uses the Pareto inverse ``(eps/eta) u^(-1/alpha)``.
    """
    u = np.asarray(u, dtype=float)
    if spec.family == ALPHA_STABLE:
        mag = spec.beta_min * u ** (-1.0 / spec.alpha)
    else:
        mag = _gamma_tail_inverse(u, spec.epsilon) / spec.eta
    return float(mag) if mag.ndim == 0 else mag


def sample_beta(spec: LevyPriorSpec, rng: np.random.Generator, size=None):
    """Draw weights from the truncated jump density ``pi_beta``.

    Symmetric families attach a fair random sign to the magnitude.
    """
    shape = () if size is None else size
    # 1 - U lies in (0, 1] and avoids an infinite magnitude
    mag = np.asarray(beta_magnitude_quantile(1.0 - rng.random(shape), spec))
    if spec.symmetric:
        mag = np.where(rng.random(shape) < 0.5, -mag, mag)
    return float(mag) if size is None else mag


def log_beta_density(beta, spec: LevyPriorSpec):
    """Log ``pi_beta`` at ``beta``; ``-inf`` outside the truncated support."""
    b = np.asarray(beta, dtype=float)
    absb = np.abs(b)
    inside = absb * spec.eta > spec.epsilon
    if spec.family == GAMMA:
        inside &= b > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        if spec.family == ALPHA_STABLE:
            a = spec.alpha
            logd = (
                math.log(a) + a * math.log(spec.epsilon) - math.log(2.0)
                - a * math.log(spec.eta) - (a + 1.0) * np.log(absb)
            )
        else:
            norm = special.exp1(spec.epsilon) * (2.0 if spec.symmetric else 1.0)
            logd = -np.log(absb) - absb * spec.eta - math.log(norm)
    out = np.where(inside, logd, -np.inf)
    return float(out) if out.ndim == 0 else out


def log_mark_density(chi, lam, spec: LevyPriorSpec):
    """Log density of the location prior (uniform centre times Gamma inverse scale)."""
    chi = np.asarray(chi, dtype=float)
    lam = np.asarray(lam, dtype=float)
    width = spec.f_max - spec.chi_min
    in_chi = (chi >= spec.chi_min) & (chi <= spec.f_max)
    a, b = spec.a_lambda, spec.b_lambda
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = a * math.log(b) - math.lgamma(a) + (a - 1) * np.log(lam) - b * lam
    out = np.where(in_chi & (lam > 0), lg - math.log(width), -np.inf)
    return float(out) if out.ndim == 0 else out


def log_poisson(J: int, nu: float) -> float:
    if nu <= 0:
        return 0.0 if J == 0 else -math.inf
    return -nu + J * math.log(nu) - math.lgamma(J + 1)


def log_prior(kernel: SpectralMixtureKernel, spec: LevyPriorSpec) -> float:
    """Prior log density of a mixture, including the ``-log J!`` Poisson term.

    Components are exchangeable, so no ordering factor is added.  A
    component outside the prior support gives ``-inf``.
    """
    J = kernel.n_components
    lp = log_poisson(J, truncated_rate(spec))
    if J == 0:
        return lp
    lp += float(np.sum(log_beta_density(kernel.beta, spec)))
    lp += float(np.sum(log_mark_density(kernel.chi, kernel.lam, spec)))
    return lp


def sample_marks(spec: LevyPriorSpec, rng: np.random.Generator, size=None):
    """Centres ``chi ~ U[chi_min, f_max]`` and inverse scales ``lam ~ Gamma(a, b)``."""
    chi = rng.uniform(spec.chi_min, spec.f_max, size)
    lam = rng.gamma(spec.a_lambda, 1.0 / spec.b_lambda, size)
    return chi, lam


def sample_prior(spec: LevyPriorSpec, rng: np.random.Generator,
                 basis: str = LAPLACIAN, sigma2: float = 0.0) -> SpectralMixtureKernel:
    """Draw one mixture from the truncated Lévy prior."""
    J = int(rng.poisson(truncated_rate(spec)))
    beta = sample_beta(spec, rng, size=J)
    chi, lam = sample_marks(spec, rng, size=J)
    # Gamma draws can underflow to 0 for tiny shapes
    lam = np.maximum(lam, np.finfo(float).tiny)
    return SpectralMixtureKernel.from_arrays(beta, chi, lam, basis=basis, sigma2=sigma2, validate=False)


def truncation_error_bound(spec: LevyPriorSpec, basis_norm: float) -> float:
    """Expected squared L2 error of dropping jumps with ``|beta| eta <= eps``.

    ``basis_norm`` is the squared L2 norm of the basis function.
    """
    if spec.family == ALPHA_STABLE and not spec.alpha < 2.0:
        raise ValueError("alpha = 2 has no finite truncation bound")
    eps = spec.epsilon
    scale = spec.gamma * basis_norm / spec.eta ** 2
    if spec.family in (GAMMA, SYMMETRIC_GAMMA):
        # 1 - (1 + eps) e^-eps, written to avoid cancellation for small eps
        tail = -math.expm1(-eps) - eps * math.exp(-eps)
        if eps < 1e-4:
            tail = eps * eps * (0.5 - eps / 3.0 + eps * eps / 8.0)
        factor = 1.0 if spec.family == GAMMA else 2.0
        return factor * scale * tail
    a = spec.alpha
    return 2.0 * scale * math.gamma(a + 1.0) / (math.pi * (2.0 - a)) * math.sin(0.5 * math.pi * a) * eps ** (2.0 - a)
