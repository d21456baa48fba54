"""Independent reference values frozen into the test suite.

Run ``python tests/oracles/generate_oracles.py`` to regenerate.  Only numpy
and scipy.integrate are used; nothing from the package under test.
"""
import math

import numpy as np
from scipy import integrate


def e1_quad(z):
    val, _ = integrate.quad(lambda t: math.exp(-t) / t, z, np.inf, epsabs=1e-15, epsrel=1e-13, limit=200)
    return val


def laplace_spectrum(beta, lam, chi, s):
    one = lambda u: beta * 0.5 * lam * math.exp(-lam * abs(u - chi))
    return 0.5 * (one(s) + one(-s))


def truncation_bound_quad(eps, gamma=1.0, eta=1.0, norm=1.0, symmetric=False):
    # E int beta^2 over jumps below the truncation: gamma * norm * int_0^{eps/eta} b^2 b^-1 e^{-b eta} db
    val, _ = integrate.quad(lambda b: b * math.exp(-b * eta), 0.0, eps / eta, epsabs=1e-15, epsrel=1e-13)
    return (2.0 if symmetric else 1.0) * gamma * norm * val


def stable_rate_quad(alpha, eps, gamma=1.0):
    # nu(beta) = gamma * c_alpha |beta|^{-1-alpha} over |beta| eta > eps, eta = 1
    c = math.gamma(alpha + 1.0) * math.sin(0.5 * math.pi * alpha) / math.pi
    val, _ = integrate.quad(lambda b: b ** (-1.0 - alpha), eps, np.inf, epsabs=1e-15, epsrel=1e-13)
    return 2.0 * gamma * c * val


def laplace_refit_grid(alpha=1.0, sigma=1.0, res=1e-3):
    s = np.linspace(-3 * sigma, 3 * sigma, 201)
    t = alpha * np.exp(-0.5 * (s / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
    lams = np.arange(0.3, 6.0 + res / 2, res)
    betas = np.arange(0.3, 2.0 + res / 2, res)
    phi = 0.5 * lams[:, None] * np.exp(-lams[:, None] * np.abs(s)[None, :])
    pp = (phi * phi).sum(1)
    pt = phi @ t
    obj = betas[None, :] ** 2 * pp[:, None] - 2 * betas[None, :] * pt[:, None] + t @ t
    i, j = np.unravel_index(np.argmin(obj), obj.shape)
    return betas[j], lams[i]


if __name__ == "__main__":
    print("E1(1)      ", repr(e1_quad(1.0)))
    print("E1(10)     ", repr(e1_quad(10.0)))
    print("E1(0.5)    ", repr(e1_quad(0.5)))
    print("S(3) b=1 l=1 c=3", repr(laplace_spectrum(1.0, 1.0, 3.0, 3.0)))
    print("bound symgamma eps=1", repr(truncation_bound_quad(1.0, symmetric=True)))
    print("bound gamma eps=0.3", repr(truncation_bound_quad(0.3)))
    print("stable rate a=1 eps=.5", repr(stable_rate_quad(1.0, 0.5)))
    print("stable rate a=.7 eps=.2 g=1.5", repr(stable_rate_quad(0.7, 0.2, 1.5)))
    print("laplace refit grid a=1 s=1", laplace_refit_grid())
