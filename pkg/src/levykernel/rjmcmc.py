"""Reversible-jump MCMC over spectral mixtures.

The chain state is an unordered set of mixture components plus the noise
variance (and, optionally, the Lévy hyperparameters).  Four move types are
used:

* birth  - add a component drawn from the prior marks; the Green ratio is
  ``L'/L * nu / (J + 1) * p_death / p_birth`` because mark densities cancel;
* death  - remove a uniformly chosen component (reciprocal ratio);
* update - random walk on ``(log|beta|, chi, log lam)`` of one component,
  with ``chi`` reflected into its prior range;
* hyper  - random walk on ``log sigma2`` (and ``log gamma``, ``log eta``,
  ``logit(alpha/2)`` when hyperparameters are sampled).

The same machinery runs Lévy adaptive regression (:func:`lark_chain`), where
the mixture is fitted to the data directly instead of through a GP.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import linalg, ndimage, signal

from .gp import CholeskyError, Dataset, jittered_cholesky
from .kernels import LAPLACIAN, SpectralMixtureKernel, gram_matrix
from .levy import (
    ALPHA_STABLE,
    HyperpriorSpec,
    LevyPriorSpec,
    log_beta_density,
    log_mark_density,
    log_prior,
    sample_beta,
    sample_marks,
    truncated_rate,
)
from .ski import CGConvergenceError, SkiConfig, ski_log_marginal

__all__ = [
    "LikelihoodError",
    "ChainConfig",
    "ChainState",
    "PosteriorSample",
    "PosteriorSampleSet",
    "ExactLikelihood",
    "SkiLikelihood",
    "NullLikelihood",
    "LarkLikelihood",
    "make_likelihood",
    "init_state",
    "mcmc_step",
    "birth_log_ratio",
    "death_log_ratio",
    "run_chain",
    "lark_chain",
    "lark_basis",
    "frequency_hits",
    "all_targets_hit",
    "frequency_clusters",
]

log = logging.getLogger(__name__)

_LOG_2PI = math.log(2.0 * math.pi)
MOVES = ("birth", "death", "update", "hyper")


class LikelihoodError(RuntimeError):
    """The likelihood backend could not evaluate a proposal."""


# ---------------------------------------------------------------------------
# configuration and state


@dataclass(frozen=True)
class ChainConfig:
    """Iteration counts, move probabilities and proposal scales."""

    n_iters: int = 2500
    burn_in: int = 500
    thin: int = 1
    p_birth: float = 0.2
    p_death: float = 0.2
    p_update: float = 0.5
    p_hyper: float = 0.1
    step_log_beta: float = 0.3
    step_chi: float = 0.005
    step_log_lambda: float = 0.3
    step_log_sigma2: float = 0.2
    step_log_gamma: float = 0.2
    step_log_eta: float = 0.2
    step_logit_alpha: float = 0.2
    sigma2_prior_center: float | None = None
    sigma2_prior_scale: float = 1.0
    sample_hyper: bool = False
    seed: int = 0
    backend: str = "exact"
    ski: SkiConfig = field(default_factory=SkiConfig)

    def __post_init__(self):
        probs = (self.p_birth, self.p_death, self.p_update, self.p_hyper)
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError("move probabilities must be non-negative and sum to 1")
        if self.p_death == 0.0 and self.p_birth != 0.0:
            raise ValueError("p_death = 0 requires p_birth = 0")
        if self.p_birth == 0.0 and self.p_death != 0.0:
            raise ValueError("p_birth = 0 requires p_death = 0")
        if self.n_iters < 0 or self.burn_in < 0 or self.thin < 1:
            raise ValueError("invalid iteration bookkeeping")
        if self.backend not in ("exact", "ski", "null"):
            raise ValueError(f"unknown likelihood backend {self.backend!r}")

    @property
    def n_samples(self) -> int:
        return max(self.n_iters - self.burn_in, 0) // self.thin

    def replace(self, **changes) -> "ChainConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class ChainState:
    kernel: SpectralMixtureKernel
    spec: LevyPriorSpec
    loglik: float
    logprior: float

    @property
    def log_posterior(self) -> float:
        return self.loglik + self.logprior

    @property
    def sigma2(self) -> float:
        return self.kernel.sigma2


@dataclass(frozen=True)
class PosteriorSample:
    iteration: int
    kernel: SpectralMixtureKernel
    log_posterior: float
    loglik: float
    spec: LevyPriorSpec | None = None

    def to_record(self) -> dict:
        rec = {
            "iteration": self.iteration,
            "log_posterior": self.log_posterior,
            "loglik": self.loglik,
            "kernel": self.kernel.to_dict(),
        }
        if self.spec is not None:
            rec["prior"] = self.spec.to_dict()
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "PosteriorSample":
        spec = LevyPriorSpec(**rec["prior"]) if "prior" in rec else None
        return cls(
            int(rec["iteration"]),
            SpectralMixtureKernel.from_dict(rec["kernel"]),
            float(rec["log_posterior"]),
            float(rec.get("loglik", math.nan)),
            spec,
        )


@dataclass
class PosteriorSampleSet:
    """Post burn-in, thinned samples with acceptance tallies and a trace."""

    samples: list
    accepted: dict
    proposed: dict
    failures: int = 0
    trace_J: np.ndarray | None = None
    trace_log_posterior: np.ndarray | None = None

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def kernels(self) -> list:
        return [s.kernel for s in self.samples]

    def acceptance_rates(self) -> dict:
        return {
            m: (self.accepted[m] / self.proposed[m] if self.proposed[m] else float("nan"))
            for m in MOVES
        }

    def n_components(self) -> np.ndarray:
        return np.array([s.kernel.n_components for s in self.samples])

    @classmethod
    def merge(cls, sets) -> "PosteriorSampleSet":
        sets = list(sets)
        out = cls([], {m: 0 for m in MOVES}, {m: 0 for m in MOVES})
        for s in sets:
            out.samples.extend(s.samples)
            for m in MOVES:
                out.accepted[m] += s.accepted[m]
                out.proposed[m] += s.proposed[m]
            out.failures += s.failures
        return out

    def to_jsonl(self, path, header: dict | None = None) -> None:
        with open(path, "w") as fh:
            if header is not None:
                fh.write(json.dumps({"header": header}) + "\n")
            for s in self.samples:
                fh.write(json.dumps(s.to_record()) + "\n")

    @classmethod
    def from_jsonl(cls, path) -> "PosteriorSampleSet":
        samples = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                if "header" in rec:
                    continue
                samples.append(PosteriorSample.from_record(rec))
        return cls(samples, {m: 0 for m in MOVES}, {m: 0 for m in MOVES})


# ---------------------------------------------------------------------------
# likelihood backends


def _uniform_spacing(x):
    if x.size < 3:
        return None
    d = np.diff(x)
    h = d[0]
    if h > 0 and np.all(np.abs(d - h) <= 1e-10 * h):
        return h
    return None


class ExactLikelihood:
    """Dense Cholesky log marginal likelihood, Toeplitz-assembled on regular inputs."""

    def __init__(self, data: Dataset):
        self.data = data
        self._h = _uniform_spacing(data.x)

    def gram(self, kernel) -> np.ndarray:
        x = self.data.x
        if self._h is None:
            return gram_matrix(kernel, x, add_noise=True)
        col = kernel(self._h * np.arange(x.size))
        col[0] += kernel.sigma2
        return linalg.toeplitz(col)

    def __call__(self, kernel) -> float:
        n = self.data.n
        if n == 0:
            return 0.0
        try:
            L, _ = jittered_cholesky(self.gram(kernel))
        except CholeskyError as exc:
            raise LikelihoodError(str(exc)) from exc
        a = linalg.solve_triangular(L, self.data.y, lower=True, check_finite=False)
        return -0.5 * float(a @ a) - float(np.sum(np.log(np.diag(L)))) - 0.5 * n * _LOG_2PI


class SkiLikelihood:
    """Structured-interpolation approximation of the log marginal likelihood."""

    def __init__(self, data: Dataset, cfg: SkiConfig | None = None):
        self.data = data
        self.cfg = cfg or SkiConfig()
        self.grid = self.cfg.grid_for(data.x)

    def __call__(self, kernel) -> float:
        try:
            val = ski_log_marginal(kernel, self.data, self.cfg, grid=self.grid)
        except CGConvergenceError as exc:
            raise LikelihoodError(f"{exc} (residual {exc.residual:.3e})") from exc
        if not math.isfinite(val):
            raise LikelihoodError("non-finite SKI log marginal")
        return val


class NullLikelihood:
    """Constant likelihood; the chain then targets the prior."""

    def __call__(self, kernel) -> float:
        return 0.0


def lark_basis(x, chi, lam) -> np.ndarray:
    """Laplacian basis ``(lam/2) exp(-lam |x - chi|)`` as an ``(n, J)`` matrix."""
    x = np.asarray(x, dtype=float)[:, None]
    return 0.5 * lam * np.exp(-lam * np.abs(x - chi))


class LarkLikelihood:
    """Direct regression ``y = sum_j beta_j phi_L(x; chi_j, lam_j) + noise``."""

    def __init__(self, data: Dataset):
        self.data = data

    def fit(self, kernel) -> np.ndarray:
        return lark_basis(self.data.x, kernel.chi, kernel.lam) @ kernel.beta

    def __call__(self, kernel) -> float:
        s2 = kernel.sigma2
        if not s2 > 0:
            raise LikelihoodError("direct regression needs sigma2 > 0")
        r = self.data.y - self.fit(kernel)
        n = self.data.n
        return -0.5 * float(r @ r) / s2 - 0.5 * n * (math.log(s2) + _LOG_2PI)


def make_likelihood(data: Dataset, config: ChainConfig) -> Callable:
    if config.backend == "exact":
        return ExactLikelihood(data)
    if config.backend == "ski":
        return SkiLikelihood(data, config.ski)
    return NullLikelihood()


# ---------------------------------------------------------------------------
# densities and ratios


def _log_sigma2_prior(sigma2, center, scale) -> float:
    """Log-normal density of ``sigma2``."""
    if not sigma2 > 0:
        return -math.inf
    z = (math.log(sigma2) - math.log(center)) / scale
    return -0.5 * z * z - math.log(scale) - 0.5 * _LOG_2PI - math.log(sigma2)


def _component_log_density(beta, chi, lam, spec) -> float:
    return float(log_beta_density(beta, spec)) + float(log_mark_density(chi, lam, spec))


class _Target:
    """Bundles the pieces of the log posterior that the moves need."""

    def __init__(self, likelihood, config: ChainConfig, sigma2_center: float,
                 hyperprior: HyperpriorSpec | None):
        self.likelihood = likelihood
        self.config = config
        self.s2_center = sigma2_center
        self.s2_scale = config.sigma2_prior_scale
        self.hyperprior = hyperprior if config.sample_hyper else None

    def logprior(self, kernel, spec) -> float:
        lp = log_prior(kernel, spec) + _log_sigma2_prior(kernel.sigma2, self.s2_center, self.s2_scale)
        if self.hyperprior is not None:
            lp += self.hyperprior.log_density(spec)
        return lp

    def s2_logprior(self, sigma2) -> float:
        return _log_sigma2_prior(sigma2, self.s2_center, self.s2_scale)


def birth_log_ratio(delta_loglik: float, nu: float, J: int, p_birth: float, p_death: float) -> float:
    """Log Green ratio for adding one prior-drawn component to a ``J``-component state."""
    return delta_loglik + math.log(nu) - math.log(J + 1) + math.log(p_death) - math.log(p_birth)


def death_log_ratio(delta_loglik: float, nu: float, J: int, p_birth: float, p_death: float) -> float:
    """Log Green ratio for removing one component from a ``J``-component state."""
    return delta_loglik - math.log(nu) + math.log(J) + math.log(p_birth) - math.log(p_death)


def _reflect(v, lo, hi):
    w = hi - lo
    t = (v - lo) % (2.0 * w)
    return lo + (t if t <= w else 2.0 * w - t)


def init_state(kernel: SpectralMixtureKernel, spec: LevyPriorSpec, likelihood,
               config: ChainConfig, hyperprior: HyperpriorSpec | None = None):
    """Evaluate the starting state; returns ``(state, target)``."""
    center = config.sigma2_prior_center or kernel.sigma2
    if not center > 0:
        raise ValueError("initial sigma2 (or sigma2_prior_center) must be positive")
    target = _Target(likelihood, config, center, hyperprior or HyperpriorSpec())
    try:
        ll = likelihood(kernel)
    except LikelihoodError as exc:
        raise ValueError(f"initial kernel is not evaluable: {exc}") from exc
    lp = target.logprior(kernel, spec)
    if not math.isfinite(lp):
        raise ValueError("initial kernel lies outside the prior support")
    return ChainState(kernel, spec, ll, lp), target


def _accept(log_ratio: float, rng) -> bool:
    if log_ratio >= 0.0:
        return True
    if log_ratio != log_ratio or log_ratio == -math.inf:
        return False
    return math.log(rng.random()) < log_ratio


def mcmc_step(state: ChainState, target: _Target, rng: np.random.Generator,
              stats: dict | None = None) -> ChainState:
    """One Metropolis-Hastings-Green step; returns the (possibly unchanged) state.

    ``stats`` (optional) is updated in place with keys ``accepted``,
    ``proposed`` (dicts by move) and ``failures``.
    """
    cfg = target.config
    u = rng.random()
    if u < cfg.p_birth:
        move = "birth"
    elif u < cfg.p_birth + cfg.p_death:
        move = "death"
    elif u < cfg.p_birth + cfg.p_death + cfg.p_update:
        move = "update"
    else:
        move = "hyper"
    new = None
    try:
        new = _MOVE_FUNCS[move](state, target, rng)
    except LikelihoodError:
        if stats is not None:
            stats["failures"] += 1
        new = None
    if stats is not None:
        stats["proposed"][move] += 1
        if new is not None:
            stats["accepted"][move] += 1
    return state if new is None else new


def _birth(state, target, rng):
    spec, kernel = state.spec, state.kernel
    cfg = target.config
    J = kernel.n_components
    beta = sample_beta(spec, rng)
    chi, lam = sample_marks(spec, rng)
    if not lam > 0:
        return None
    prop = kernel.add(beta, chi, lam)
    ll = target.likelihood(prop)
    nu = truncated_rate(spec)
    log_r = birth_log_ratio(ll - state.loglik, nu, J, cfg.p_birth, cfg.p_death)
    if not _accept(log_r, rng):
        return None
    lp = state.logprior + math.log(nu) - math.log(J + 1) + _component_log_density(beta, chi, lam, spec)
    return ChainState(prop, spec, ll, lp)


def _death(state, target, rng):
    spec, kernel = state.spec, state.kernel
    cfg = target.config
    J = kernel.n_components
    if J == 0:
        return None
    j = int(rng.integers(J))
    prop = kernel.remove(j)
    ll = target.likelihood(prop)
    nu = truncated_rate(spec)
    log_r = death_log_ratio(ll - state.loglik, nu, J, cfg.p_birth, cfg.p_death)
    if not _accept(log_r, rng):
        return None
    old = _component_log_density(kernel.beta[j], kernel.chi[j], kernel.lam[j], spec)
    lp = state.logprior - math.log(nu) + math.log(J) - old
    return ChainState(prop, spec, ll, lp)


def _update(state, target, rng):
    spec, kernel = state.spec, state.kernel
    cfg = target.config
    J = kernel.n_components
    if J == 0:
        return None
    j = int(rng.integers(J))
    b, c, l = float(kernel.beta[j]), float(kernel.chi[j]), float(kernel.lam[j])
    z = rng.standard_normal(3)
    dlb = cfg.step_log_beta * z[0]
    dll = cfg.step_log_lambda * z[2]
    b_new = b * math.exp(dlb)
    c_new = _reflect(c + cfg.step_chi * z[1], spec.chi_min, spec.f_max)
    l_new = l * math.exp(dll)
    new_d = _component_log_density(b_new, c_new, l_new, spec)
    if new_d == -math.inf:
        return None
    old_d = _component_log_density(b, c, l, spec)
    prop = kernel.replace(j, b_new, c_new, l_new)
    ll = target.likelihood(prop)
    # log-scale random walks contribute the Jacobian |b'|/|b| * l'/l
    log_r = ll - state.loglik + new_d - old_d + dlb + dll
    if not _accept(log_r, rng):
        return None
    return ChainState(prop, spec, ll, state.logprior + new_d - old_d)


def _hyper(state, target, rng):
    cfg = target.config
    choices = ["sigma2"]
    if target.hyperprior is not None:
        choices += ["gamma", "eta"]
        if state.spec.family == ALPHA_STABLE:
            choices.append("alpha")
    what = choices[int(rng.integers(len(choices)))] if len(choices) > 1 else "sigma2"
    kernel, spec = state.kernel, state.spec
    z = float(rng.standard_normal())
    if what == "sigma2":
        s2 = kernel.sigma2
        d = cfg.step_log_sigma2 * z
        s2_new = s2 * math.exp(d)
        prop = kernel.with_sigma2(s2_new)
        dlp = target.s2_logprior(s2_new) - target.s2_logprior(s2)
        ll = target.likelihood(prop)
        log_r = ll - state.loglik + dlp + d
        if not _accept(log_r, rng):
            return None
        return ChainState(prop, spec, ll, state.logprior + dlp)
    if what == "gamma":
        d = cfg.step_log_gamma * z
        new_spec = spec.replace(gamma=spec.gamma * math.exp(d))
        jac = d
    elif what == "eta":
        d = cfg.step_log_eta * z
        new_spec = spec.replace(eta=spec.eta * math.exp(d))
        jac = d
    else:
        a = spec.alpha
        logit = math.log(0.5 * a) - math.log1p(-0.5 * a) + cfg.step_logit_alpha * z
        a_new = 2.0 / (1.0 + math.exp(-logit))
        if not 0.0 < a_new < 2.0:
            return None
        new_spec = spec.replace(alpha=a_new)
        jac = math.log(a_new * (1 - 0.5 * a_new)) - math.log(a * (1 - 0.5 * a))
    lp_new = target.logprior(kernel, new_spec)
    if lp_new == -math.inf:
        return None
    # likelihood does not depend on the Lévy hyperparameters
    log_r = lp_new - state.logprior + jac
    if not _accept(log_r, rng):
        return None
    return ChainState(kernel, new_spec, state.loglik, lp_new)


_MOVE_FUNCS = {"birth": _birth, "death": _death, "update": _update, "hyper": _hyper}


# ---------------------------------------------------------------------------
# drivers


def _run(state, target, config: ChainConfig, rng, keep_spec: bool, progress=None):
    stats = {"accepted": {m: 0 for m in MOVES}, "proposed": {m: 0 for m in MOVES}, "failures": 0}
    samples = []
    trace_J = np.empty(config.n_iters, dtype=int)
    trace_lp = np.empty(config.n_iters)
    for it in range(config.n_iters):
        state = mcmc_step(state, target, rng, stats)
        trace_J[it] = state.kernel.n_components
        trace_lp[it] = state.log_posterior
        k = it + 1 - config.burn_in
        if k > 0 and k % config.thin == 0:
            samples.append(
                PosteriorSample(it + 1, state.kernel, state.log_posterior, state.loglik,
                                state.spec if keep_spec else None)
            )
        if progress is not None:
            progress(it, state)
    if stats["failures"]:
        log.info("%d proposals rejected by likelihood failures", stats["failures"])
    return PosteriorSampleSet(samples, stats["accepted"], stats["proposed"], stats["failures"],
                              trace_J, trace_lp)


def run_chain(data: Dataset, spec: LevyPriorSpec, init_kernel: SpectralMixtureKernel,
              config: ChainConfig, hyperprior: HyperpriorSpec | None = None,
              likelihood=None, progress=None) -> PosteriorSampleSet:
    """Run one RJ-MCMC chain for the GP spectral-mixture model.

    ``init_kernel.sigma2`` is the starting noise variance and, unless
    ``config.sigma2_prior_center`` is set, the centre of its log-normal prior.
    The result is deterministic given ``config.seed``.
    """
    likelihood = likelihood or make_likelihood(data, config)
    rng = np.random.default_rng(config.seed)
    state, target = init_state(init_kernel, spec, likelihood, config, hyperprior)
    return _run(state, target, config, rng, config.sample_hyper, progress)


def lark_chain(data: Dataset, spec: LevyPriorSpec, config: ChainConfig,
               init_kernel: SpectralMixtureKernel | None = None,
               sigma2: float | None = None,
               hyperprior: HyperpriorSpec | None = None) -> PosteriorSampleSet:
    """Lévy adaptive regression: fit the data directly with Laplacian bumps.

    Component centres live in input space; ``spec.chi_min``/``spec.f_max`` are
    reset to the data range.  The chain starts from ``init_kernel`` or the
    empty expansion, with noise ``sigma2`` (default: the data variance).
    """
    lo, hi = float(data.x.min()), float(data.x.max())
    spec = spec.replace(chi_min=lo, f_max=hi)
    if init_kernel is None:
        s2 = float(np.var(data.y)) if sigma2 is None else sigma2
        init_kernel = SpectralMixtureKernel.from_arrays([], [], [], LAPLACIAN, s2)
    elif sigma2 is not None:
        init_kernel = init_kernel.with_sigma2(sigma2)
    config = config.replace(backend="null")
    rng = np.random.default_rng(config.seed)
    state, target = init_state(init_kernel, spec, LarkLikelihood(data), config, hyperprior)
    return _run(state, target, config, rng, config.sample_hyper)


def lark_posterior_mean(samples: PosteriorSampleSet, x) -> np.ndarray:
    """Posterior mean of the regression function at ``x``."""
    x = np.asarray(x, dtype=float)
    acc = np.zeros(x.size)
    for s in samples:
        k = s.kernel
        if k.n_components:
            acc += lark_basis(x, k.chi, k.lam) @ k.beta
    return acc / max(len(samples), 1)


def frequency_hits(samples: PosteriorSampleSet, targets, tol: float = 0.01,
                   min_weight: float = 0.0) -> np.ndarray:
    """Fraction of samples containing a component within ``tol`` of each target.

    Components with ``|beta| <= min_weight`` are ignored.  Returns one
    fraction per target frequency.
    """
    targets = np.asarray(targets, dtype=float)
    hits = np.zeros(targets.size)
    for s in samples:
        k = s.kernel
        chi = k.chi[np.abs(k.beta) > min_weight]
        if chi.size:
            hits += (np.abs(chi[None, :] - targets[:, None]) <= tol).any(axis=1)
    return hits / max(len(samples), 1)


def all_targets_hit(samples: PosteriorSampleSet, targets, tol: float = 0.01,
                    min_weight: float = 0.0) -> float:
    """Fraction of samples in which every target frequency has a nearby component."""
    targets = np.asarray(targets, dtype=float)
    n = 0
    for s in samples:
        k = s.kernel
        chi = k.chi[np.abs(k.beta) > min_weight]
        if chi.size and (np.abs(chi[None, :] - targets[:, None]) <= tol).any(axis=1).all():
            n += 1
    return n / max(len(samples), 1)


def frequency_clusters(samples: PosteriorSampleSet, top: int = 2, bandwidth: float = 0.005,
                       n_grid: int = 2048):
    """Dominant clusters of the pooled component centres.

    Centres from all samples are smoothed into a density weighted by
    ``|beta|`` (Gaussian smoothing of width ``bandwidth``); each density mode
    owns the centres between its neighbouring minima.  The ``top`` clusters
    with the largest weight are returned as ``(centres, weight_fractions)``
    sorted by centre, where each centre is the weighted mean of its members.
    """
    kernels = [s.kernel for s in samples]
    chi = np.concatenate([k.chi for k in kernels]) if kernels else np.zeros(0)
    w = np.concatenate([np.abs(k.beta) for k in kernels]) if kernels else np.zeros(0)
    if chi.size == 0 or not w.sum() > 0:
        return np.zeros(0), np.zeros(0)
    lo, hi = chi.min() - 4 * bandwidth, chi.max() + 4 * bandwidth
    grid = np.linspace(lo, hi, n_grid)
    hist, edges = np.histogram(chi, bins=n_grid, range=(lo, hi), weights=w)
    dens = ndimage.gaussian_filter1d(hist, bandwidth / (edges[1] - edges[0]), mode="constant")
    peaks, _ = signal.find_peaks(np.concatenate([[0.0], dens, [0.0]]))
    peaks = peaks - 1
    cuts = [grid[p + int(np.argmin(dens[p:q + 1]))] for p, q in zip(peaks[:-1], peaks[1:])]
    lab = np.searchsorted(np.asarray(cuts), chi)
    mass = np.bincount(lab, weights=w, minlength=peaks.size)
    centre = np.bincount(lab, weights=w * chi, minlength=peaks.size) / np.where(mass > 0, mass, 1.0)
    keep = np.argsort(mass)[::-1][:top]
    keep = keep[np.argsort(centre[keep])]
    return centre[keep], mass[keep] / w.sum()
