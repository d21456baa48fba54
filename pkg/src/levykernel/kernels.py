"""Spectral-mixture covariance kernels.

A stationary kernel is described through its spectral density, modelled as a
symmetrised mixture of localised bumps

    S(s) = 1/2 [S~(s) + S~(-s)],    S~(s) = sum_j beta_j phi(s; chi_j, lam_j)

The Laplacian bump ``phi_L(s) = (lam/2) exp(-lam |s - chi|)`` has the closed
form inverse Fourier transform

    k(tau) = sum_j beta_j lam_j^2 / (lam_j^2 + 4 pi^2 tau^2) cos(2 pi chi_j tau)

and the Gaussian bump (``lam`` reinterpreted as a spectral width) gives the
familiar spectral mixture kernel ``beta exp(-2 pi^2 tau^2 lam^2) cos(2 pi chi tau)``.

Frequencies are in cycles per input unit.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "LAPLACIAN",
    "GAUSSIAN",
    "SpectralComponent",
    "SpectralMixtureKernel",
    "RbfKernel",
    "laplace_kernel_eval",
    "gaussian_spectral_kernel_eval",
    "spectral_density_eval",
    "rbf_kernel_eval",
    "gram_matrix",
]

LAPLACIAN = "laplacian"
GAUSSIAN = "gaussian"
_BASES = (LAPLACIAN, GAUSSIAN)

_TWO_PI = 2.0 * math.pi
_FOUR_PI2 = 4.0 * math.pi ** 2


def _finite_array(x, name):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} must be finite")
    return x


@dataclass(frozen=True)
class SpectralComponent:
    """One mixture term: weight ``beta``, centre ``chi`` and inverse scale ``lam``."""

    beta: float
    chi: float
    lam: float

    def __post_init__(self):
        if not math.isfinite(self.beta) or self.beta == 0.0:
            raise ValueError(f"beta must be finite and nonzero, got {self.beta}")
        if not (math.isfinite(self.chi) and self.chi >= 0.0):
            raise ValueError(f"chi must be finite and >= 0, got {self.chi}")
        if not (math.isfinite(self.lam) and self.lam > 0.0):
            raise ValueError(f"lam must be finite and > 0, got {self.lam}")


class SpectralMixtureKernel:
    """Immutable spectral mixture with white observation noise ``sigma2``.

    Components are stored column-wise in the read-only arrays ``beta``, ``chi``
    and ``lam``.  The mixture is treated as an unordered set; the order of
    the arrays carries no meaning.

    Parameters
    ----------
    components : iterable of SpectralComponent
    basis : {"laplacian", "gaussian"}
    sigma2 : float
        Observation noise variance, added to the Gram diagonal on request.
    """

    __slots__ = ("beta", "chi", "lam", "basis", "sigma2")

    def __init__(
        self,
        components: Iterable[SpectralComponent] = (),
        basis: str = LAPLACIAN,
        sigma2: float = 0.0,
    ):
        comps = list(components)
        beta = np.array([c.beta for c in comps], dtype=float)
        chi = np.array([c.chi for c in comps], dtype=float)
        lam = np.array([c.lam for c in comps], dtype=float)
        self._set(beta, chi, lam, basis, sigma2)

    def _set(self, beta, chi, lam, basis, sigma2):
        if basis not in _BASES:
            raise ValueError(f"unknown basis {basis!r}")
        sigma2 = float(sigma2)
        if not (math.isfinite(sigma2) and sigma2 >= 0.0):
            raise ValueError(f"sigma2 must be finite and >= 0, got {sigma2}")
        for a in (beta, chi, lam):
            a.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "chi", chi)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "sigma2", sigma2)

    def __setattr__(self, name, value):
        raise AttributeError("SpectralMixtureKernel is immutable")

    def __reduce__(self):
        return (type(self).from_arrays,
                (np.array(self.beta), np.array(self.chi), np.array(self.lam),
                 self.basis, self.sigma2, False))

    @classmethod
    def from_arrays(cls, beta, chi, lam, basis=LAPLACIAN, sigma2=0.0, validate=True):
        """Build a kernel from parallel parameter arrays.

        ``validate=False`` skips the per-component checks; the sampler uses it
        for proposals it has already constrained.
        """
        beta = np.array(beta, dtype=float).reshape(-1)
        chi = np.array(chi, dtype=float).reshape(-1)
        lam = np.array(lam, dtype=float).reshape(-1)
        if not (beta.shape == chi.shape == lam.shape):
            raise ValueError("beta, chi and lam must have equal length")
        if validate:
            for b, c, l in zip(beta, chi, lam):
                SpectralComponent(float(b), float(c), float(l))
        obj = cls.__new__(cls)
        obj._set(beta, chi, lam, basis, sigma2)
        return obj

    # -- structure -------------------------------------------------------
    @property
    def n_components(self) -> int:
        return self.beta.shape[0]

    J = n_components

    @property
    def components(self) -> list[SpectralComponent]:
        return [
            SpectralComponent(float(b), float(c), float(l))
            for b, c, l in zip(self.beta, self.chi, self.lam)
        ]

    @property
    def variance(self) -> float:
        """k(0), the signal variance (sum of weights)."""
        return float(self.beta.sum())

    def with_sigma2(self, sigma2: float) -> "SpectralMixtureKernel":
        return self.from_arrays(self.beta, self.chi, self.lam, self.basis, sigma2, validate=False)

    def add(self, beta: float, chi: float, lam: float) -> "SpectralMixtureKernel":
        return self.from_arrays(
            np.append(self.beta, beta),
            np.append(self.chi, chi),
            np.append(self.lam, lam),
            self.basis,
            self.sigma2,
            validate=False,
        )

    def remove(self, index: int) -> "SpectralMixtureKernel":
        keep = np.arange(self.n_components) != index
        return self.from_arrays(
            self.beta[keep], self.chi[keep], self.lam[keep], self.basis, self.sigma2, validate=False
        )

    def replace(self, index: int, beta: float, chi: float, lam: float) -> "SpectralMixtureKernel":
        b, c, l = self.beta.copy(), self.chi.copy(), self.lam.copy()
        b[index], c[index], l[index] = beta, chi, lam
        return self.from_arrays(b, c, l, self.basis, self.sigma2, validate=False)

    # -- evaluation ------------------------------------------------------
    def __call__(self, tau) -> np.ndarray:
        """Evaluate k(tau); tau may be any array shape."""
        tau = np.asarray(tau, dtype=float)
        if self.basis == LAPLACIAN:
            return _laplace_k(self.beta, self.chi, self.lam, tau)
        return _gauss_k(self.beta, self.chi, self.lam, tau)

    def spectral_density(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return 0.5 * (self._one_sided(s) + self._one_sided(-s))

    def _one_sided(self, s):
        d = s[..., None] - self.chi
        if self.basis == LAPLACIAN:
            phi = 0.5 * self.lam * np.exp(-self.lam * np.abs(d))
        else:
            phi = np.exp(-0.5 * (d / self.lam) ** 2) / (math.sqrt(_TWO_PI) * self.lam)
        return phi @ self.beta

    # -- serialisation ---------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "basis": self.basis,
            "sigma2": self.sigma2,
            "components": [
                {"beta": float(b), "chi": float(c), "lambda": float(l)}
                for b, c, l in zip(self.beta, self.chi, self.lam)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpectralMixtureKernel":
        comps = d.get("components", [])
        return cls.from_arrays(
            [c["beta"] for c in comps],
            [c["chi"] for c in comps],
            [c["lambda"] for c in comps],
            basis=d.get("basis", LAPLACIAN),
            sigma2=d.get("sigma2", 0.0),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "SpectralMixtureKernel":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, SpectralMixtureKernel):
            return NotImplemented
        return (
            self.basis == other.basis
            and self.sigma2 == other.sigma2
            and np.array_equal(self.beta, other.beta)
            and np.array_equal(self.chi, other.chi)
            and np.array_equal(self.lam, other.lam)
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"SpectralMixtureKernel(J={self.n_components}, basis={self.basis!r}, "
            f"sigma2={self.sigma2:.4g}, k0={self.variance:.4g})"
        )


def _laplace_k(beta, chi, lam, tau):
    out = np.zeros(tau.shape)
    if beta.size == 0:
        return out
    tau2 = _FOUR_PI2 * tau * tau
    for b, c, l in zip(beta, chi, lam):
        l2 = l * l
        term = l2 / (l2 + tau2)
        if c != 0.0:
            term *= np.cos(_TWO_PI * c * tau)
        out += b * term
    return out


def _gauss_k(beta, chi, width, tau):
    out = np.zeros(tau.shape)
    tau2 = 0.5 * _FOUR_PI2 * tau * tau
    for b, c, w in zip(beta, chi, width):
        term = np.exp(-tau2 * (w * w))
        if c != 0.0:
            term *= np.cos(_TWO_PI * c * tau)
        out += b * term
    return out


def laplace_kernel_eval(kernel: SpectralMixtureKernel, tau) -> np.ndarray:
    """k(tau) for a Laplacian-basis mixture. Raises ValueError on non-finite tau."""
    if kernel.basis != LAPLACIAN:
        raise ValueError("kernel basis must be laplacian")
    tau = _finite_array(tau, "tau")
    return _laplace_k(kernel.beta, kernel.chi, kernel.lam, tau)


def gaussian_spectral_kernel_eval(kernel: SpectralMixtureKernel, tau) -> np.ndarray:
    """k(tau) for a Gaussian-basis mixture; ``lam`` holds the spectral widths."""
    if kernel.basis != GAUSSIAN:
        raise ValueError("kernel basis must be gaussian")
    tau = _finite_array(tau, "tau")
    return _gauss_k(kernel.beta, kernel.chi, kernel.lam, tau)


def spectral_density_eval(kernel: SpectralMixtureKernel, s) -> np.ndarray:
    """Symmetrised spectral density S(s)."""
    return kernel.spectral_density(_finite_array(s, "s"))


class RbfKernel:
    """Squared-exponential kernel ``variance * exp(-0.5 tau^2 / lengthscale^2)``."""

    def __init__(self, lengthscale: float, variance: float = 1.0, sigma2: float = 0.0):
        if not lengthscale > 0:
            raise ValueError(f"lengthscale must be > 0, got {lengthscale}")
        self.lengthscale = float(lengthscale)
        self.variance = float(variance)
        self.sigma2 = float(sigma2)

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        return self.variance * np.exp(-0.5 * (tau / self.lengthscale) ** 2)

    def __repr__(self):
        return f"RbfKernel(lengthscale={self.lengthscale:.4g}, variance={self.variance:.4g})"


def rbf_kernel_eval(lengthscale: float, tau) -> np.ndarray:
    if not lengthscale > 0:
        raise ValueError(f"lengthscale must be > 0, got {lengthscale}")
    tau = np.asarray(tau, dtype=float)
    return np.exp(-0.5 * tau * tau / (lengthscale * lengthscale))


def gram_matrix(kernel, X1: Sequence[float], X2: Sequence[float] | None = None,
                add_noise: bool = False, jitter: float = 0.0) -> np.ndarray:
    """Dense covariance matrix ``K[i, j] = k(X1[i] - X2[j])``.

    ``X2=None`` means X2 is X1; only then are ``add_noise`` (which adds
    ``kernel.sigma2``) and ``jitter`` placed on the diagonal.  No attempt is
    made to repair indefinite matrices from mixtures with negative weights.
    """
    if jitter < 0:
        raise ValueError("jitter must be >= 0")
    X1 = _finite_array(X1, "X1").reshape(-1)
    same = X2 is None or X2 is X1
    X2 = X1 if same else _finite_array(X2, "X2").reshape(-1)
    if X1.size == 0 or X2.size == 0:
        return np.zeros((X1.size, X2.size))
    K = kernel(X1[:, None] - X2[None, :])
    if same:
        K = 0.5 * (K + K.T)
        diag = jitter + (getattr(kernel, "sigma2", 0.0) if add_noise else 0.0)
        if diag:
            K[np.diag_indices_from(K)] += diag
    return K
