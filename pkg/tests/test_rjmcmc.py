import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from levykernel.datasets import bumps
from levykernel.gp import Dataset, log_marginal_likelihood
from levykernel.kernels import SpectralMixtureKernel
from levykernel.levy import LevyPriorSpec, log_mark_density, log_beta_density, log_prior, truncated_rate
from levykernel.rjmcmc import (
    MOVES,
    ChainConfig,
    ExactLikelihood,
    LarkLikelihood,
    LikelihoodError,
    NullLikelihood,
    PosteriorSampleSet,
    _log_sigma2_prior,
    _reflect,
    all_targets_hit,
    birth_log_ratio,
    death_log_ratio,
    frequency_clusters,
    frequency_hits,
    init_state,
    lark_basis,
    lark_chain,
    lark_posterior_mean,
    mcmc_step,
    run_chain,
)
from oracle_helpers import chi_square_poisson

SPEC = LevyPriorSpec(family="symmetric_gamma", gamma=1.0, eta=2.0, epsilon=0.2, a_lambda=2.0, b_lambda=0.1)


def _toy_data(n=40, seed=0):
    rng = np.random.default_rng(seed)
    x = np.arange(float(n))
    y = np.cos(2 * np.pi * 0.1 * x) + 0.3 * rng.standard_normal(n)
    return Dataset(x, y - y.mean())


def _init_kernel():
    return SpectralMixtureKernel.from_arrays([0.5], [0.1], [20.0], sigma2=0.1)


class TestGreenRatios:
    @given(st.floats(-50, 50), st.floats(1e-3, 50), st.integers(0, 40), st.floats(0.05, 0.45), st.floats(0.05, 0.45))
    def test_birth_death_reciprocal(self, dl, nu, J, pb, pd):
        total = birth_log_ratio(dl, nu, J, pb, pd) + death_log_ratio(-dl, nu, J + 1, pb, pd)
        assert abs(total) < 1e-12

    def test_birth_ratio_is_posterior_ratio_over_proposal(self):
        # pi(k')/pi(k) * q(k | k') / q(k' | k) with q(k'|k) = p_b pi_mark(c) / (J+1)
        # (uniform insertion position) and q(k|k') = p_d / (J+1)
        k = SpectralMixtureKernel.from_arrays([0.5, -0.4], [0.1, 0.3], [10.0, 30.0])
        b, c, l = 0.7, 0.22, 15.0
        kp = k.add(b, c, l)
        pb, pd = 0.2, 0.3
        J = k.n_components
        mark = float(log_beta_density(b, SPEC)) + float(log_mark_density(c, l, SPEC))
        ref = (log_prior(kp, SPEC) - log_prior(k, SPEC)) + math.log(pd / (J + 1)) - math.log(pb * math.exp(mark) / (J + 1))
        np.testing.assert_allclose(birth_log_ratio(0.0, truncated_rate(SPEC), J, pb, pd), ref, rtol=1e-12)

    @given(st.floats(-10, 10), st.floats(0.0, 1.0), st.floats(0.01, 2.0))
    def test_reflect_stays_in_range(self, v, lo, width):
        hi = lo + width
        r = _reflect(v, lo, hi)
        assert lo - 1e-12 <= r <= hi + 1e-12
        if lo <= v <= hi:
            assert abs(r - v) < 1e-12


class TestMoves:
    def test_identical_update_always_accepted(self):
        data = _toy_data()
        cfg = ChainConfig(p_birth=0.0, p_death=0.0, p_update=1.0, p_hyper=0.0,
                          step_log_beta=0.0, step_chi=0.0, step_log_lambda=0.0)
        state, target = init_state(_init_kernel(), SPEC, ExactLikelihood(data), cfg)
        stats = {"accepted": dict.fromkeys(MOVES, 0), "proposed": dict.fromkeys(MOVES, 0), "failures": 0}
        rng = np.random.default_rng(0)
        for _ in range(200):
            state = mcmc_step(state, target, rng, stats)
        assert stats["accepted"]["update"] == stats["proposed"]["update"] == 200

    def test_cached_log_posterior_matches_recomputation(self):
        data = _toy_data()
        init = _init_kernel()
        cfg = ChainConfig(n_iters=400, burn_in=0, seed=3)
        ss = run_chain(data, SPEC, init, cfg)
        for s in ss.samples[::20]:
            k = s.kernel
            lp = log_prior(k, SPEC) + _log_sigma2_prior(k.sigma2, init.sigma2, cfg.sigma2_prior_scale)
            ll = log_marginal_likelihood(k, data)
            np.testing.assert_allclose(s.loglik, ll, rtol=1e-9)
            np.testing.assert_allclose(s.log_posterior, ll + lp, rtol=1e-9)

    def test_failed_likelihood_rejects(self):
        base = NullLikelihood()

        def capped(kernel):
            if kernel.n_components > 3:
                raise LikelihoodError("too many")
            return base(kernel)

        cfg = ChainConfig(n_iters=3000, burn_in=0, seed=1)
        spec = SPEC.replace(gamma=5.0)
        ss = run_chain(_toy_data(), spec, _init_kernel(), cfg, likelihood=capped)
        assert ss.n_components().max() <= 3
        assert ss.failures > 0

    def test_gamma_family_keeps_positive_weights(self):
        spec = SPEC.replace(family="gamma")
        ss = run_chain(_toy_data(), spec, _init_kernel(), ChainConfig(n_iters=2000, burn_in=0, backend="null", seed=2))
        assert all(np.all(k.beta > 0) for k in ss.kernels)

    def test_symmetric_family_visits_negative_weights(self):
        ss = run_chain(_toy_data(), SPEC, _init_kernel(), ChainConfig(n_iters=3000, burn_in=0, backend="null", seed=2))
        assert any(np.any(k.beta < 0) for k in ss.kernels)

    def test_initial_state_outside_support(self):
        bad = SpectralMixtureKernel.from_arrays([0.01], [0.1], [20.0], sigma2=0.1)
        with pytest.raises(ValueError):
            run_chain(_toy_data(), SPEC, bad, ChainConfig(n_iters=10))


class TestRunChain:
    @pytest.mark.parametrize("iters,burn,thin", [(100, 20, 1), (100, 20, 3), (50, 50, 1), (10, 0, 7)])
    def test_sample_count(self, iters, burn, thin):
        cfg = ChainConfig(n_iters=iters, burn_in=burn, thin=thin, backend="null")
        ss = run_chain(_toy_data(), SPEC, _init_kernel(), cfg)
        assert len(ss) == (iters - burn) // thin == cfg.n_samples
        assert ss.trace_J.size == iters

    def test_finite_log_posterior(self):
        ss = run_chain(_toy_data(), SPEC, _init_kernel(), ChainConfig(n_iters=300, burn_in=100))
        assert np.all(np.isfinite([s.log_posterior for s in ss]))

    def test_deterministic(self):
        cfg = ChainConfig(n_iters=300, burn_in=50, seed=9)
        a = run_chain(_toy_data(), SPEC, _init_kernel(), cfg)
        b = run_chain(_toy_data(), SPEC, _init_kernel(), cfg)
        assert all(x.kernel == y.kernel for x, y in zip(a, b))
        assert a.acceptance_rates() == b.acceptance_rates()

    def test_null_chain_poisson_count(self):
        # shorter version of the acceptance-suite Geweke check
        spec = SPEC.replace(gamma=0.8)
        cfg = ChainConfig(n_iters=100_000, burn_in=1000, thin=10, backend="null", seed=4)
        ss = run_chain(_toy_data(), spec, SpectralMixtureKernel(sigma2=0.1), cfg)
        _, p, dof = chi_square_poisson(ss.n_components(), truncated_rate(spec))
        assert dof >= 2 and p > 1e-3

    def test_jsonl_round_trip(self, tmp_path):
        ss = run_chain(_toy_data(), SPEC, _init_kernel(), ChainConfig(n_iters=60, burn_in=10))
        path = tmp_path / "s.jsonl"
        ss.to_jsonl(path, header={"seed": 0})
        back = PosteriorSampleSet.from_jsonl(path)
        assert len(back) == len(ss)
        assert all(a.kernel == b.kernel for a, b in zip(ss, back))
        np.testing.assert_array_equal([s.log_posterior for s in back], [s.log_posterior for s in ss])

    def test_merge(self):
        cfg = ChainConfig(n_iters=50, burn_in=10, backend="null")
        a = run_chain(_toy_data(), SPEC, _init_kernel(), cfg)
        b = run_chain(_toy_data(), SPEC, _init_kernel(), cfg.replace(seed=1))
        m = PosteriorSampleSet.merge([a, b])
        assert len(m) == len(a) + len(b)

    def test_bad_probabilities(self):
        with pytest.raises(ValueError):
            ChainConfig(p_birth=0.5, p_death=0.5, p_update=0.5, p_hyper=0.0)
        with pytest.raises(ValueError):
            ChainConfig(p_birth=0.2, p_death=0.0, p_update=0.7, p_hyper=0.1)


class TestLark:
    def test_empty_expansion_is_white_noise(self, rng):
        y = rng.standard_normal(30)
        data = Dataset(np.arange(30.0), y)
        k = SpectralMixtureKernel(sigma2=0.7)
        ref = -0.5 * y @ y / 0.7 - 15 * math.log(2 * math.pi * 0.7)
        np.testing.assert_allclose(LarkLikelihood(data)(k), ref, rtol=1e-13)

    def test_basis_peak(self):
        np.testing.assert_allclose(lark_basis(np.array([0.3]), np.array([0.3]), np.array([8.0])), [[4.0]])

    def test_zero_noise_recovery(self):
        x = np.linspace(0, 1, 200)
        f = lark_basis(x, np.array([0.3, 0.7]), np.array([20.0, 40.0])) @ np.array([1.0, -0.5])
        spec = LevyPriorSpec(family="symmetric_gamma", gamma=1.0, eta=1.0, epsilon=0.1, a_lambda=2.0, b_lambda=0.05)
        cfg = ChainConfig(n_iters=50_000, burn_in=25_000, thin=10, seed=1, step_chi=0.005,
                          step_log_beta=0.05, step_log_lambda=0.05, sigma2_prior_scale=10.0)
        ss = lark_chain(Dataset(x, f), spec, cfg, sigma2=1e-2 * np.var(f))
        rmse = np.sqrt(np.mean((lark_posterior_mean(ss, x) - f) ** 2))
        assert rmse < 0.01 * np.std(f)

    def test_spike_function_sparsity(self):
        n = 512
        s = bumps(n, seed=1)
        spec = LevyPriorSpec(family="gamma", gamma=1.0, eta=10.0 / (np.sum(s.y) / n), epsilon=0.5,
                             a_lambda=2.0, b_lambda=0.01)
        cfg = ChainConfig(n_iters=60_000, burn_in=30_000, thin=10, seed=1, step_chi=0.5 / n)
        ss = lark_chain(Dataset(s.x, s.y), spec, cfg, sigma2=1.0)
        rmse = np.sqrt(np.mean((lark_posterior_mean(ss, s.x) - s.f) ** 2))
        assert rmse < s.noise_std
        assert ss.n_components().mean() <= 1.5 * len(s.meta["locations"])

    def test_centres_stay_in_input_range(self):
        x = np.linspace(2.0, 5.0, 50)
        y = np.sin(x)
        ss = lark_chain(Dataset(x, y), SPEC, ChainConfig(n_iters=2000, burn_in=0, seed=0), sigma2=0.1)
        chi = np.concatenate([k.chi for k in ss.kernels])
        assert chi.size and chi.min() >= 2.0 and chi.max() <= 5.0


class _Fake:
    def __init__(self, kernels):
        self.samples = [type("S", (), {"kernel": k})() for k in kernels]

    def __iter__(self):
        return iter(self.samples)

    def __len__(self):
        return len(self.samples)


class TestFrequencySummaries:
    def _set(self):
        ks = []
        for i in range(10):
            chis = [0.115 + 0.002 * (i % 3), 0.3 - 0.001 * (i % 2)]
            if i < 3:
                chis.append(0.45)
            ks.append(SpectralMixtureKernel.from_arrays([1.0] * len(chis), chis, [50.0] * len(chis)))
        ks.append(SpectralMixtureKernel.from_arrays([1.0], [0.3], [50.0]))
        return _Fake(ks)

    def test_hits(self):
        s = self._set()
        np.testing.assert_allclose(frequency_hits(s, [0.115, 0.3]), [10 / 11, 1.0])
        np.testing.assert_allclose(all_targets_hit(s, [0.115, 0.3]), 10 / 11)

    def test_min_weight_filter(self):
        k = SpectralMixtureKernel.from_arrays([0.01, 1.0], [0.115, 0.3], [50.0, 50.0])
        assert all_targets_hit(_Fake([k]), [0.115, 0.3], min_weight=0.1) == 0.0

    def test_clusters(self):
        centres, w = frequency_clusters(self._set(), top=2)
        np.testing.assert_allclose(centres, [0.1169, 0.2995], atol=2e-3)
        assert w.sum() <= 1.0 and np.all(w > 0.3)

    def test_clusters_empty(self):
        c, w = frequency_clusters(_Fake([SpectralMixtureKernel()]))
        assert c.size == 0 and w.size == 0
