"""Lévy-process priors over spectral mixture kernels for Gaussian processes.

Kernels are built from Laplacian (or Gaussian) bumps in the spectral
domain; the number and shape of bumps are sampled by reversible-jump MCMC
under a truncated Lévy prior, and predictions average over posterior kernels.
"""
from .kernels import (
    GAUSSIAN,
    LAPLACIAN,
    RbfKernel,
    SpectralComponent,
    SpectralMixtureKernel,
    gram_matrix,
    laplace_kernel_eval,
    spectral_density_eval,
)
from .levy import (
    ALPHA_STABLE,
    GAMMA,
    SYMMETRIC_GAMMA,
    HyperpriorSpec,
    LevyPriorSpec,
    log_prior,
    sample_beta,
    sample_prior,
    truncated_rate,
    truncation_error_bound,
)
from .gp import Dataset, MeanRecord, gp_predict, log_marginal_likelihood
from .ski import SkiConfig, ski_log_marginal, ski_predict, toeplitz_matvec
from .rjmcmc import ChainConfig, PosteriorSampleSet, lark_chain, run_chain
from .init_spectrum import init_from_data, periodogram, uniform_init
from .bma import bma_predict, credible_bands

__version__ = "0.1.0"
