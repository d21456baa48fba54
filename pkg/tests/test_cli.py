import csv
import json

import numpy as np
import pytest

from levykernel.cli import CliError, main, parse_config, parse_config_text
from levykernel.datasets import airline
from levykernel.gp import Dataset, gp_predict
from levykernel.init_spectrum import demean
from levykernel.rjmcmc import PosteriorSampleSet


def _write_cfg(tmp_path, text, name="cfg.txt"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _read_csv(path):
    with open(path) as fh:
        header = fh.readline()
        rows = list(csv.reader(fh))
    return header, rows[0], rows[1:]


class TestConfig:
    def test_defaults(self, tmp_path):
        cfg = parse_config(_write_cfg(tmp_path, "dataset = airline\nseed = 1\n"))
        assert cfg["prior.family"] == "SymmetricGamma"
        assert cfg["chain.iters"] == 2500
        assert cfg["seed"] == 1

    def test_unknown_key_names_it(self):
        with pytest.raises(CliError) as exc:
            parse_config_text("famly = Gamma\n")
        assert exc.value.code == 3
        assert "famly" in str(exc.value)

    def test_bad_value(self):
        with pytest.raises(CliError) as exc:
            parse_config_text("chain.iters = -4\n")
        assert exc.value.code == 3 and "chain.iters" in str(exc.value)

    def test_bad_family(self):
        with pytest.raises(CliError):
            parse_config_text("prior.family = Cauchy\n")

    def test_round_trip(self):
        cfg = parse_config_text("dataset = airline\nseed = 3\nprior.eta = 0.5\npredict.levels = [0.5, 0.9]\n")
        assert parse_config_text(cfg.to_text()) == cfg

    def test_missing_file_exit_code(self, tmp_path, capsys):
        assert main(["init", "--config", str(tmp_path / "nope.txt")]) == 2
        assert "not found" in capsys.readouterr().err

    def test_main_unknown_key_exit_code(self, tmp_path, capsys):
        assert main(["init", "--config", _write_cfg(tmp_path, "famly = Gamma\n")]) == 3
        assert "famly" in capsys.readouterr().err

    def test_fit_requires_seed(self, tmp_path, capsys):
        cfg = _write_cfg(tmp_path, f"dataset = airline\nout = {tmp_path / 'o'}\n")
        assert main(["fit", "--config", cfg]) == 3


class TestSamplePrior:
    def _cfg(self, tmp_path, n=3):
        return _write_cfg(tmp_path, f"sample_prior.n = {n}\nsample_prior.n_x = 50\nprior.epsilon = 0.05\n")

    def test_deterministic(self, tmp_path, capsys):
        cfg = self._cfg(tmp_path)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["sample-prior", "--config", cfg, "--seed", "5", "--out", str(a)]) == 0
        assert main(["sample-prior", "--config", cfg, "--seed", "5", "--out", str(b)]) == 0
        for f in ("prior_kernels.json", "prior_kernel_curves.csv", "prior_spectra.csv", "prior_draws.csv"):
            assert (a / f).read_bytes() == (b / f).read_bytes()

    def test_zero_samples_header_only(self, tmp_path, capsys):
        out = tmp_path / "o"
        assert main(["sample-prior", "--config", self._cfg(tmp_path, 0), "--out", str(out)]) == 0
        header, cols, rows = _read_csv(out / "prior_kernel_curves.csv")
        assert header.startswith("# levykernel") and "seed=0" in header
        assert cols == ["sample", "tau", "k"] and rows == []

    def test_zero_lag_equals_total_weight(self, tmp_path, capsys):
        out = tmp_path / "o"
        assert main(["sample-prior", "--config", self._cfg(tmp_path, 6), "--seed", "2", "--out", str(out)]) == 0
        kernels = json.loads((out / "prior_kernels.json").read_text())["kernels"]
        _, _, rows = _read_csv(out / "prior_kernel_curves.csv")
        k0 = {int(r[0]): float(r[2]) for r in rows if float(r[1]) == 0.0}
        for i, k in enumerate(kernels):
            np.testing.assert_allclose(k0[i], sum(c["beta"] for c in k["components"]), atol=1e-12)

    def test_indefinite_draws_are_listed(self, tmp_path, capsys):
        out = tmp_path / "o"
        assert main(["sample-prior", "--config", self._cfg(tmp_path, 8), "--seed", "2", "--out", str(out)]) == 0
        doc = json.loads((out / "prior_kernels.json").read_text())
        _, _, rows = _read_csv(out / "prior_draws.csv")
        drawn = {int(r[0]) for r in rows}
        assert drawn.isdisjoint(doc["draws_skipped"])
        assert drawn | set(doc["draws_skipped"]) == set(range(8))

    def test_unwritable_output(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["sample-prior", "--out", str(blocker / "sub")]) == 4


class TestFit:
    def _cfg(self, tmp_path, iters=40, burn=10, extra=""):
        return _write_cfg(tmp_path, (
            f"dataset = airline\ndemean = linear\nsplit.train = 96\nseed = 0\n"
            f"chain.iters = {iters}\nchain.burn_in = {burn}\nout = {tmp_path / 'out'}\n{extra}"
        ))

    def test_trace_length(self, tmp_path, capsys):
        assert main(["fit", "--config", self._cfg(tmp_path)]) == 0
        header, cols, rows = _read_csv(tmp_path / "out" / "trace.csv")
        assert cols == ["chain", "iteration", "J", "log_posterior"]
        assert len(rows) == 40
        rep = json.loads((tmp_path / "out" / "acceptance.json").read_text())
        assert rep["n_samples"] == 30

    def test_same_seed_same_samples(self, tmp_path, capsys):
        cfg = self._cfg(tmp_path)
        assert main(["fit", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
        assert main(["fit", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
        assert (tmp_path / "a" / "samples.jsonl").read_bytes() == (tmp_path / "b" / "samples.jsonl").read_bytes()

    def test_airline_mean_components(self, tmp_path, capsys):
        assert main(["fit", "--config", self._cfg(tmp_path, 2500, 500)]) == 0
        rep = json.loads((tmp_path / "out" / "acceptance.json").read_text())
        assert rep["mean_J"] >= 2

    def test_two_chains(self, tmp_path, capsys):
        assert main(["fit", "--config", self._cfg(tmp_path, 20, 5), "--chains", "2"]) == 0
        ss = PosteriorSampleSet.from_jsonl(tmp_path / "out" / "samples.jsonl")
        assert len(ss) == 30

    def test_too_few_points(self, tmp_path, capsys):
        data = tmp_path / "d.csv"
        data.write_text("x,y\n" + "".join(f"{i},{i % 3}\n" for i in range(5)))
        cfg = _write_cfg(tmp_path, f"dataset = {data}\nseed = 0\nout = {tmp_path / 'o'}\n")
        assert main(["fit", "--config", cfg]) == 5


class TestPredict:
    def _fit(self, tmp_path, iters, burn, extra=""):
        cfg = _write_cfg(tmp_path, (
            f"dataset = airline\ndemean = linear\nsplit.train = 96\nseed = 0\n"
            f"chain.iters = {iters}\nchain.burn_in = {burn}\nout = {tmp_path / 'out'}\n{extra}"
        ))
        assert main(["fit", "--config", cfg]) == 0
        return cfg

    def test_single_sample_equals_gp_predict(self, tmp_path, capsys):
        cfg = self._fit(tmp_path, 11, 10)
        assert main(["predict", "--config", cfg]) == 0
        _, cols, rows = _read_csv(tmp_path / "out" / "bands.csv")
        assert cols[:3] == ["x_star", "mean", "var"]
        got = np.array(rows, dtype=float)
        ss = PosteriorSampleSet.from_jsonl(tmp_path / "out" / "samples.jsonl")
        assert len(ss) == 1
        s = airline()
        yc, rec = demean(s.y[:96], "linear", s.x[:96])
        p = gp_predict(ss.kernels[0], Dataset(s.x[:96], yc, rec), s.x[96:], full_cov=False, include_noise=True)
        np.testing.assert_allclose(got[:, 1], p.mean + rec(s.x[96:]), rtol=1e-10)
        np.testing.assert_allclose(got[:, 2], p.var, rtol=1e-10)

    def test_nested_bands_and_report(self, tmp_path, capsys):
        cfg = self._fit(tmp_path, 60, 20, "predict.levels = [0.5, 0.95]\n")
        assert main(["predict", "--config", cfg]) == 0
        _, cols, rows = _read_csv(tmp_path / "out" / "bands.csv")
        v = np.array(rows, dtype=float)
        lo50, hi50, lo95, hi95 = v[:, 3], v[:, 4], v[:, 5], v[:, 6]
        assert np.all(lo95 <= lo50) and np.all(lo50 <= hi50) and np.all(hi50 <= hi95)
        rep = json.loads((tmp_path / "out" / "predict_report.json").read_text())
        assert set(rep["coverage"]) == {"0.5", "0.95"}
        assert rep["rbf_baseline"]["rmse"] > 0

    def test_grid_output(self, tmp_path, capsys):
        cfg = self._fit(tmp_path, 15, 10, "predict.start = 0\npredict.stop = 10\npredict.count = 11\n")
        assert main(["predict", "--config", cfg]) == 0
        _, _, rows = _read_csv(tmp_path / "out" / "bands.csv")
        np.testing.assert_allclose([float(r[0]) for r in rows], np.arange(11.0))

    def test_missing_samples(self, tmp_path, capsys):
        cfg = _write_cfg(tmp_path, f"dataset = airline\nout = {tmp_path / 'o'}\n")
        assert main(["predict", "--config", cfg]) == 2

    def test_empty_samples(self, tmp_path, capsys):
        cfg = self._fit(tmp_path, 10, 10)
        assert main(["predict", "--config", cfg]) == 5


class TestBenchmark:
    def test_rows_and_accuracy(self, tmp_path, capsys):
        cfg = _write_cfg(tmp_path, f"benchmark.n_list = [300, 1000]\nbenchmark.m = 512\nout = {tmp_path / 'o'}\n")
        assert main(["benchmark-ski", "--config", cfg]) == 0
        _, cols, rows = _read_csv(tmp_path / "o" / "benchmark_ski.csv")
        assert len(rows) == 2
        assert all(float(r[cols.index("rel_err")]) < 0.01 for r in rows)

    def test_exact_skipped(self, tmp_path, capsys):
        cfg = _write_cfg(tmp_path, (f"benchmark.n_list = [200, 400]\nbenchmark.exact_max = 300\n"
                                    f"benchmark.m = 256\nout = {tmp_path / 'o'}\n"))
        assert main(["benchmark-ski", "--config", cfg]) == 0
        _, cols, rows = _read_csv(tmp_path / "o" / "benchmark_ski.csv")
        assert rows[1][cols.index("exact_logml")] == "skipped"
        assert rows[0][cols.index("exact_logml")] != "skipped"


class TestInit:
    def test_writes_prior_and_periodogram(self, tmp_path, capsys):
        cfg = _write_cfg(tmp_path, f"dataset = airline\ndemean = linear\nout = {tmp_path / 'o'}\n")
        assert main(["init", "--config", cfg]) == 0
        doc = json.loads((tmp_path / "o" / "init.json").read_text())
        assert doc["header"]["config_sha256"] == parse_config(cfg).digest()
        assert doc["J0"] >= 1
        _, cols, rows = _read_csv(tmp_path / "o" / "periodogram.csv")
        assert cols == ["s", "power"] and len(rows) == 72
