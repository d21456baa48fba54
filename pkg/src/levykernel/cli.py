"""Command-line interface: ``levykernel <subcommand> --config PATH``.

Configuration files are plain ``key = value`` lines; values are parsed as
JSON when possible (numbers, ``true``, ``null``, lists) and as bare strings
otherwise.  ``#`` starts a comment line.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .bma import bma_predict
from .datasets import Series, load_dataset
from .gp import CholeskyError, Dataset, fit_rbf_baseline, gp_predict, log_marginal_likelihood, sample_gp
from .init_spectrum import demean, init_from_data
from .kernels import LAPLACIAN, SpectralMixtureKernel
from .levy import LevyPriorSpec, canonical_family, sample_prior
from .rjmcmc import ChainConfig, PosteriorSampleSet, run_chain
from .ski import SkiConfig, ski_log_marginal

__all__ = [
    "EXIT_OK",
    "EXIT_MISSING",
    "EXIT_CONFIG",
    "EXIT_IO",
    "EXIT_EMPTY",
    "CliError",
    "ExperimentConfig",
    "parse_config",
    "parse_config_text",
    "cmd_sample_prior",
    "cmd_init",
    "cmd_fit",
    "cmd_predict",
    "cmd_benchmark_ski",
    "main",
]

EXIT_OK, EXIT_FAILURE, EXIT_MISSING, EXIT_CONFIG, EXIT_IO, EXIT_EMPTY = 0, 1, 2, 3, 4, 5


class CliError(Exception):
    """Error carrying the process exit code."""

    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# configuration

# key -> (default, kind)
SCHEMA = {
    "dataset": (None, "opt_str"),
    "x_column": (None, "opt_str"),
    "y_column": (None, "opt_str"),
    "seed": (None, "opt_int"),
    "out": ("out", "str"),
    "demean": ("constant", "choice:constant,linear,none"),
    "init": ("empirical", "choice:empirical,uniform"),
    "split.train": (None, "opt_int"),
    "synthetic.n": (None, "opt_int"),
    "init.J0": (None, "opt_int"),
    "prior.family": ("SymmetricGamma", "family"),
    "prior.gamma": (None, "opt_pos"),
    "prior.eta": (None, "opt_pos"),
    "prior.alpha": (None, "opt_pos"),
    "prior.epsilon": (None, "opt_pos"),
    "prior.a_lambda": (None, "opt_pos"),
    "prior.b_lambda": (None, "opt_pos"),
    "prior.f_max": (None, "opt_pos"),
    "chain.iters": (2500, "nonneg_int"),
    "chain.burn_in": (500, "nonneg_int"),
    "chain.thin": (1, "pos_int"),
    "chain.backend": ("exact", "choice:exact,ski"),
    "chain.p_birth": (0.2, "prob"),
    "chain.p_death": (0.2, "prob"),
    "chain.p_update": (0.5, "prob"),
    "chain.p_hyper": (0.1, "prob"),
    "chain.step_log_beta": (0.3, "pos"),
    "chain.step_chi": (0.005, "pos"),
    "chain.step_log_lambda": (0.3, "pos"),
    "chain.step_log_sigma2": (0.2, "pos"),
    "chain.sigma2_prior_scale": (1.0, "pos"),
    "chain.sample_hyper": (False, "bool"),
    "ski.m": (1024, "pos_int"),
    "ski.cg_tol": (1e-6, "pos"),
    "ski.cg_max_iters": (2000, "pos_int"),
    "ski.method": ("lagrange", "choice:lagrange,keys"),
    "ski.precondition": (False, "bool"),
    "predict.start": (None, "opt_float"),
    "predict.stop": (None, "opt_float"),
    "predict.count": (None, "opt_int"),
    "predict.levels": ([0.95], "levels"),
    "predict.backend": ("exact", "choice:exact,ski"),
    "predict.max_samples": (200, "pos_int"),
    "sample_prior.n": (5, "nonneg_int"),
    "sample_prior.tau_max": (50.0, "pos"),
    "sample_prior.n_tau": (201, "pos_int"),
    "sample_prior.n_s": (501, "pos_int"),
    "sample_prior.n_x": (200, "pos_int"),
    "sample_prior.sigma2": (0.0, "nonneg"),
    "benchmark.n_list": ([1000, 2000, 4000], "int_list"),
    "benchmark.m": (1024, "pos_int"),
    "benchmark.exact_max": (4000, "nonneg_int"),
}


def _coerce(key, value, kind):
    def bad(why):
        return CliError(f"invalid value for {key!r}: {value!r} ({why})", EXIT_CONFIG)

    is_num = isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind.startswith("opt_"):
        if value is None:
            return None
        kind = kind[4:]
    if kind == "str":
        if not isinstance(value, str):
            raise bad("expected a string")
        return value
    if kind.startswith("choice:"):
        options = kind[7:].split(",")
        if value not in options:
            raise bad(f"expected one of {options}")
        return value
    if kind == "family":
        try:
            canonical_family(str(value))
        except ValueError:
            raise bad("unknown Levy family") from None
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise bad("expected true or false")
        return value
    if kind in ("int", "pos_int", "nonneg_int"):
        if not (is_num and float(value).is_integer()):
            raise bad("expected an integer")
        v = int(value)
        if kind == "pos_int" and v < 1 or kind == "nonneg_int" and v < 0:
            raise bad("out of range")
        return v
    if kind in ("float", "pos", "nonneg", "prob"):
        if not (is_num and math.isfinite(value)):
            raise bad("expected a finite number")
        v = float(value)
        if (kind == "pos" and v <= 0 or kind == "nonneg" and v < 0
                or kind == "prob" and not 0 <= v <= 1):
            raise bad("out of range")
        return v
    if kind == "levels":
        if not (isinstance(value, list) and value and all(
                isinstance(v, (int, float)) and not isinstance(v, bool) and 0 < v < 1 for v in value)):
            raise bad("expected a list of levels in (0, 1)")
        return [float(v) for v in value]
    if kind == "int_list":
        if not (isinstance(value, list) and all(
                isinstance(v, int) and not isinstance(v, bool) and v > 0 for v in value)):
            raise bad("expected a list of positive integers")
        return list(value)
    raise AssertionError(kind)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration; every schema key is present."""

    values: dict

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def to_text(self) -> str:
        return "".join(f"{k} = {json.dumps(self.values[k])}\n" for k in SCHEMA)

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]

    def replace(self, **changes) -> "ExperimentConfig":
        """Override keys; dots in keys are written as ``__``."""
        vals = dict(self.values)
        for k, v in changes.items():
            k = k.replace("__", ".")
            if k not in SCHEMA:
                raise CliError(f"unknown configuration key {k!r}", EXIT_CONFIG)
            vals[k] = _coerce(k, v, SCHEMA[k][1])
        return ExperimentConfig(vals)

    def prior_overrides(self) -> dict:
        out = {}
        for k in ("gamma", "eta", "alpha", "epsilon", "a_lambda", "b_lambda", "f_max"):
            v = self.values[f"prior.{k}"]
            if v is not None:
                out[k] = v
        return out

    def chain_config(self, seed: int) -> ChainConfig:
        v = self.values
        return ChainConfig(
            n_iters=v["chain.iters"], burn_in=v["chain.burn_in"], thin=v["chain.thin"],
            p_birth=v["chain.p_birth"], p_death=v["chain.p_death"],
            p_update=v["chain.p_update"], p_hyper=v["chain.p_hyper"],
            step_log_beta=v["chain.step_log_beta"], step_chi=v["chain.step_chi"],
            step_log_lambda=v["chain.step_log_lambda"], step_log_sigma2=v["chain.step_log_sigma2"],
            sigma2_prior_scale=v["chain.sigma2_prior_scale"], sample_hyper=v["chain.sample_hyper"],
            seed=seed, backend=v["chain.backend"], ski=self.ski_config(),
        )

    def ski_config(self) -> SkiConfig:
        v = self.values
        return SkiConfig(m=v["ski.m"], cg_tol=v["ski.cg_tol"], cg_max_iters=v["ski.cg_max_iters"],
                         method=v["ski.method"], precondition=v["ski.precondition"])


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse configuration text; unknown keys and bad values raise :class:`CliError` (code 3)."""
    vals = {k: d for k, (d, _) in SCHEMA.items()}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError(f"line {lineno}: expected 'key = value'", EXIT_CONFIG)
        key, _, val = (p.strip() for p in line.partition("="))
        if key not in SCHEMA:
            raise CliError(f"unknown configuration key {key!r} (line {lineno})", EXIT_CONFIG)
        try:
            value = json.loads(val)
        except json.JSONDecodeError:
            value = val
        vals[key] = _coerce(key, value, SCHEMA[key][1])
    try:
        ChainConfig(p_birth=vals["chain.p_birth"], p_death=vals["chain.p_death"],
                    p_update=vals["chain.p_update"], p_hyper=vals["chain.p_hyper"])
    except ValueError as exc:
        raise CliError(f"invalid chain move probabilities: {exc}", EXIT_CONFIG) from None
    return ExperimentConfig(vals)


def parse_config(path) -> ExperimentConfig:
    """Read and validate a configuration file (missing file: code 2)."""
    if path is None:
        return parse_config_text("")
    try:
        with open(path) as fh:
            text = fh.read()
    except FileNotFoundError:
        raise CliError(f"configuration file not found: {path}", EXIT_MISSING) from None
    except OSError as exc:
        raise CliError(f"cannot read configuration {path}: {exc}", EXIT_IO) from None
    return parse_config_text(text)


# ---------------------------------------------------------------------------
# helpers


def _header(cfg: ExperimentConfig, seed) -> dict:
    return {"tool": "levykernel", "version": __version__, "config_sha256": cfg.digest(), "seed": seed}


def _header_line(cfg: ExperimentConfig, seed) -> str:
    return f"# levykernel {__version__} config_sha256={cfg.digest()} seed={seed}"


def _outdir(path) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {path}: {exc}", EXIT_IO) from None
    if not os.access(path, os.W_OK):
        raise CliError(f"output directory {path} is not writable", EXIT_IO)
    return path


def _write_csv(path, header_line, columns, rows):
    try:
        with open(path, "w", newline="") as fh:
            fh.write(header_line + "\n")
            w = csv.writer(fh)
            w.writerow(columns)
            w.writerows(rows)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from None


def _write_json(path, obj):
    try:
        with open(path, "w") as fh:
            json.dump(obj, fh, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from None


def _load_series(cfg: ExperimentConfig, seed) -> Series:
    name = cfg["dataset"]
    if name is None:
        raise CliError("configuration key 'dataset' is required", EXIT_CONFIG)
    try:
        s = load_dataset(name, cfg["x_column"], cfg["y_column"], cfg["synthetic.n"], seed or 0)
    except FileNotFoundError:
        raise CliError(f"dataset not found: {name}", EXIT_MISSING) from None
    except (KeyError, ValueError) as exc:
        raise CliError(f"cannot load dataset {name}: {exc}", EXIT_CONFIG) from None
    if s.n == 0:
        raise CliError(f"dataset {name} is empty", EXIT_EMPTY)
    return s


def _split(cfg: ExperimentConfig, s: Series):
    """``(x_train, y_train, x_test, y_test)``; the test part may be empty."""
    k = cfg["split.train"]
    if k is None and "n_train" in s.meta:
        k = s.meta["n_train"]
    if k is None or k >= s.n:
        return s.x, s.y, s.x[:0], s.y[:0]
    return s.x[:k], s.y[:k], s.x[k:], s.y[k:]


def _require_seed(seed):
    if seed is None:
        raise CliError("a seed is required (config key 'seed' or --seed)", EXIT_CONFIG)
    return int(seed)


def _initialise(cfg: ExperimentConfig, x, y, seed):
    res = init_from_data(
        y, x, mode=cfg["demean"], J0=cfg["init.J0"], family=cfg["prior.family"],
        uniform=cfg["init"] == "uniform", rng=np.random.default_rng(seed),
        f_max=cfg["prior.f_max"],
    )
    over = cfg.prior_overrides()
    if over:
        res.spec = res.spec.replace(**over)
    return res


# ---------------------------------------------------------------------------
# subcommands


def cmd_sample_prior(cfg: ExperimentConfig, seed=None, out=None) -> dict:
    """Prior kernels with their ``k(tau)``, ``S(s)`` curves and one GP draw each."""
    seed = 0 if seed is None else int(seed)
    out = _outdir(out or cfg["out"])
    rng = np.random.default_rng(seed)
    spec = LevyPriorSpec(family=cfg["prior.family"], **cfg.prior_overrides())
    n = cfg["sample_prior.n"]
    tau = np.linspace(0.0, cfg["sample_prior.tau_max"], cfg["sample_prior.n_tau"])
    s = np.linspace(-spec.f_max, spec.f_max, cfg["sample_prior.n_s"])
    xg = np.arange(cfg["sample_prior.n_x"], dtype=float)
    kernels, krows, srows, drows, skipped = [], [], [], [], []
    for i in range(n):
        k = sample_prior(spec, rng, LAPLACIAN, cfg["sample_prior.sigma2"])
        kernels.append(k.to_dict())
        krows += [(i, repr(float(t)), repr(float(v))) for t, v in zip(tau, k(tau))]
        srows += [(i, repr(float(a)), repr(float(v))) for a, v in zip(s, k.spectral_density(s))]
        try:
            f = sample_gp(k, xg, rng) if k.n_components else np.zeros(xg.size)
        except CholeskyError:
            # signed weights can give an indefinite kernel: no GP to draw from
            skipped.append(i)
            continue
        drows += [(i, repr(float(a)), repr(float(v))) for a, v in zip(xg, f)]
    hl = _header_line(cfg, seed)
    _write_json(os.path.join(out, "prior_kernels.json"),
                {"header": _header(cfg, seed), "prior": spec.to_dict(), "kernels": kernels,
                 "draws_skipped": skipped})
    _write_csv(os.path.join(out, "prior_kernel_curves.csv"), hl, ["sample", "tau", "k"], krows)
    _write_csv(os.path.join(out, "prior_spectra.csv"), hl, ["sample", "s", "S"], srows)
    _write_csv(os.path.join(out, "prior_draws.csv"), hl, ["sample", "x", "f"], drows)
    return {"n": n, "draws_skipped": skipped}


def cmd_init(cfg: ExperimentConfig, seed=None, out=None) -> dict:
    """Empirical-spectrum initialisation: mixture JSON, tuned prior and periodogram CSV."""
    seed = 0 if seed is None else int(seed)
    out = _outdir(out or cfg["out"])
    s = _load_series(cfg, seed)
    x, y, _, _ = _split(cfg, s)
    if x.size < 8:
        raise CliError("at least 8 training points are required", EXIT_EMPTY)
    res = _initialise(cfg, x, y, seed)
    doc = {
        "header": _header(cfg, seed),
        "kernel": res.kernel.to_dict(),
        "prior": res.spec.to_dict(),
        "tuned": {k: getattr(res.hyper, k) for k in
                  ("a_lambda", "b_lambda", "eta", "gamma", "alpha", "epsilon")},
        "gamma_range": list(res.hyper.gamma_range),
        "mean": res.mean.to_dict(),
        "J0": res.mixture.n_components if res.mixture is not None else None,
    }
    _write_json(os.path.join(out, "init.json"), doc)
    pg = res.periodogram
    _write_csv(os.path.join(out, "periodogram.csv"), _header_line(cfg, seed), ["s", "power"],
               [(repr(float(a)), repr(float(b))) for a, b in zip(pg.freqs, pg.power)])
    return doc


def _chain_job(args):
    data, spec, kernel, config, hyperprior = args
    return run_chain(data, spec, kernel, config, hyperprior)


def cmd_fit(cfg: ExperimentConfig, seed=None, out=None, chains: int = 1) -> dict:
    """Initialise and run RJ-MCMC; writes samples, trace and acceptance report."""
    seed = _require_seed(seed if seed is not None else cfg["seed"])
    out = _outdir(out or cfg["out"])
    s = _load_series(cfg, seed)
    x, y, _, _ = _split(cfg, s)
    if x.size < 8:
        raise CliError("at least 8 training points are required", EXIT_EMPTY)
    res = _initialise(cfg, x, y, seed)
    data = Dataset(x, res.y, res.mean)
    hyperprior = res.hyper.hyperprior()
    jobs = [(data, res.spec, res.kernel, cfg.chain_config(seed + c), hyperprior) for c in range(chains)]
    try:
        if chains > 1:
            with ProcessPoolExecutor(max_workers=min(chains, os.cpu_count() or 1)) as ex:
                results = list(ex.map(_chain_job, jobs))
        else:
            results = [_chain_job(jobs[0])]
    except Exception as exc:  # noqa: BLE001 - reported with diagnostics
        diag = os.path.join(out, "diagnostics.txt")
        with open(diag, "w") as fh:
            fh.write(traceback.format_exc())
        raise CliError(f"chain failed ({exc}); diagnostics in {diag}", EXIT_FAILURE) from None
    merged = PosteriorSampleSet.merge(results)
    header = dict(_header(cfg, seed), mean=res.mean.to_dict(), n_train=int(x.size), chains=chains)
    try:
        merged.to_jsonl(os.path.join(out, "samples.jsonl"), header)
    except OSError as exc:
        raise CliError(f"cannot write samples: {exc}", EXIT_IO) from None
    rows = []
    for c, r in enumerate(results):
        rows += [(c, i + 1, int(j), repr(float(lp)))
                 for i, (j, lp) in enumerate(zip(r.trace_J, r.trace_log_posterior))]
    _write_csv(os.path.join(out, "trace.csv"), _header_line(cfg, seed),
               ["chain", "iteration", "J", "log_posterior"], rows)
    report = {
        "header": _header(cfg, seed),
        "acceptance": merged.acceptance_rates(),
        "failures": merged.failures,
        "n_samples": len(merged),
        "mean_J": float(merged.n_components().mean()) if len(merged) else None,
    }
    _write_json(os.path.join(out, "acceptance.json"), report)
    return report


def cmd_predict(cfg: ExperimentConfig, samples_path=None, seed=None, out=None) -> dict:
    """Model-averaged predictive bands on the configured grid (or the test split)."""
    seed = 0 if seed is None else int(seed)
    out = _outdir(out or cfg["out"])
    samples_path = samples_path or os.path.join(out, "samples.jsonl")
    try:
        samples = PosteriorSampleSet.from_jsonl(samples_path)
    except FileNotFoundError:
        raise CliError(f"samples file not found: {samples_path}", EXIT_MISSING) from None
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read samples {samples_path}: {exc}", EXIT_IO) from None
    if len(samples) == 0:
        raise CliError(f"samples file {samples_path} holds no samples", EXIT_EMPTY)
    s = _load_series(cfg, seed)
    x, y, xt, yt = _split(cfg, s)
    yc, rec = demean(y, cfg["demean"], x)
    data = Dataset(x, yc, rec)
    if cfg["predict.count"] is not None:
        start = cfg["predict.start"] if cfg["predict.start"] is not None else float(s.x.min())
        stop = cfg["predict.stop"] if cfg["predict.stop"] is not None else float(s.x.max())
        x_star, y_true = np.linspace(start, stop, cfg["predict.count"]), None
    elif xt.size:
        x_star, y_true = xt, yt
    else:
        x_star, y_true = x, y
    H = len(samples)
    keep = np.unique(np.linspace(0, H - 1, min(H, cfg["predict.max_samples"])).round().astype(int))
    chosen = [samples.samples[i] for i in keep]
    summary = bma_predict(chosen, data, x_star, backend=cfg["predict.backend"], ski=cfg.ski_config())
    levels = cfg["predict.levels"]
    try:
        summary.write_csv(os.path.join(out, "bands.csv"), levels, _header_line(cfg, seed))
    except OSError as exc:
        raise CliError(f"cannot write bands: {exc}", EXIT_IO) from None
    report = {"header": _header(cfg, seed), "n_samples_used": len(chosen), "skipped": summary.skipped}
    if y_true is not None:
        report["rmse"] = float(np.sqrt(np.mean((summary.mean - y_true) ** 2)))
        report["coverage"] = {}
        for lev in levels:
            lo, hi = summary.bands[lev]
            report["coverage"][str(lev)] = float(np.mean((y_true >= lo) & (y_true <= hi)))
        if data.n <= 2000:
            base = fit_rbf_baseline(data)
            pb = gp_predict(base, data, x_star, full_cov=False)
            report["rbf_baseline"] = {
                "lengthscale": base.lengthscale,
                "rmse": float(np.sqrt(np.mean((pb.mean + rec(x_star) - y_true) ** 2))),
            }
    _write_json(os.path.join(out, "predict_report.json"), report)
    return report


BENCHMARK_KERNEL = SpectralMixtureKernel.from_arrays(
    [1.0, 0.5], [0.01, 0.03], [100.0, 150.0], LAPLACIAN, 0.1
)


def cmd_benchmark_ski(cfg: ExperimentConfig, seed=None, out=None) -> dict:
    """Exact vs SKI log marginal likelihood (value and wall time) across sizes."""
    seed = 0 if seed is None else int(seed)
    out = _outdir(out or cfg["out"])
    ski = SkiConfig(m=cfg["benchmark.m"], cg_tol=cfg["ski.cg_tol"],
                    cg_max_iters=cfg["ski.cg_max_iters"], method=cfg["ski.method"],
                    precondition=cfg["ski.precondition"])
    n_list = cfg["benchmark.n_list"]
    base = None
    if cfg["dataset"] is not None:
        base = _load_series(cfg, seed)
    rng = np.random.default_rng(seed)
    rows, results = [], []
    for n in n_list:
        if base is not None:
            if n > base.n:
                raise CliError(f"dataset has {base.n} points, fewer than n={n}", EXIT_CONFIG)
            x, y = base.x[:n], base.y[:n] - base.y[:n].mean()
        else:
            x = np.arange(n, dtype=float)
            y = _smooth_synthetic(x, rng)
        data = Dataset(x, y)
        t0 = time.perf_counter()
        ski_val = ski_log_marginal(BENCHMARK_KERNEL, data, ski)
        t_ski = time.perf_counter() - t0
        if n <= cfg["benchmark.exact_max"]:
            t0 = time.perf_counter()
            ex_val = log_marginal_likelihood(BENCHMARK_KERNEL, data)
            t_ex = time.perf_counter() - t0
            rel = abs(ski_val - ex_val) / abs(ex_val)
        else:
            ex_val = t_ex = rel = None
        results.append({"n": n, "m": ski.m, "exact": ex_val, "ski": ski_val,
                        "rel_err": rel, "t_exact": t_ex, "t_ski": t_ski})
        rows.append([n, ski.m, "skipped" if ex_val is None else repr(ex_val), repr(ski_val),
                     "skipped" if rel is None else repr(rel),
                     "skipped" if t_ex is None else f"{t_ex:.6f}", f"{t_ski:.6f}"])
    _write_csv(os.path.join(out, "benchmark_ski.csv"), _header_line(cfg, seed),
               ["n", "m", "exact_logml", "ski_logml", "rel_err", "t_exact", "t_ski"], rows)
    return {"rows": results}


def _smooth_synthetic(x, rng):
    """Two slow tones plus noise: resolvable by the grid at every benchmark size."""
    ph = rng.uniform(0, 2 * np.pi, 2)
    y = np.cos(2 * np.pi * 0.01 * x + ph[0]) + 0.7 * np.cos(2 * np.pi * 0.03 * x + ph[1])
    return y + 0.3 * rng.standard_normal(x.size)


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="configuration file")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (overrides config)")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory (overrides config)")
    common.add_argument("--chains", type=int, default=argparse.SUPPRESS,
                        help="independent chains for fit, seeds seed+0..k-1")
    p = argparse.ArgumentParser(prog="levykernel", parents=[common],
                                description="Lévy-process spectral kernel learning")
    p.add_argument("--version", action="version", version=f"levykernel {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("sample-prior", parents=[common], help="draw kernels from the prior")
    sub.add_parser("init", parents=[common], help="empirical-spectrum initialisation")
    sub.add_parser("fit", parents=[common], help="run RJ-MCMC")
    pp = sub.add_parser("predict", parents=[common], help="model-averaged predictive bands")
    pp.add_argument("--samples", default=None, help="samples file (default OUT/samples.jsonl)")
    sub.add_parser("benchmark-ski", parents=[common], help="exact vs SKI likelihood benchmark")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(getattr(args, "config", None))
        seed = getattr(args, "seed", None)
        if seed is None:
            seed = cfg["seed"]
        if seed is not None and seed < 0:
            raise CliError("seed must be a non-negative integer", EXIT_CONFIG)
        out = getattr(args, "out", None)
        chains = getattr(args, "chains", 1)
        if chains < 1:
            raise CliError("--chains must be >= 1", EXIT_CONFIG)
        cmd = args.command
        if cmd == "sample-prior":
            res = cmd_sample_prior(cfg, seed, out)
        elif cmd == "init":
            res = cmd_init(cfg, seed, out)
        elif cmd == "fit":
            res = cmd_fit(cfg, seed, out, chains)
        elif cmd == "predict":
            res = cmd_predict(cfg, args.samples, seed, out)
        else:
            res = cmd_benchmark_ski(cfg, seed, out)
    except CliError as exc:
        print(f"levykernel: error: {exc}", file=sys.stderr)
        return exc.code
    print(json.dumps(_jsonable(res), indent=1, default=str))
    return EXIT_OK


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


if __name__ == "__main__":
    sys.exit(main())
