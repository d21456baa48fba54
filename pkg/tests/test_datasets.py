import numpy as np
import pytest
from scipy import integrate

from levykernel.datasets import (
    TWO_PEAK_KERNEL,
    airline,
    bumps,
    bumps_function,
    load_csv,
    load_dataset,
    sound,
    two_peak,
)


class TestAirline:
    def test_shape_and_endpoints(self):
        s = airline()
        assert s.n == 144
        np.testing.assert_array_equal(s.x, np.arange(144.0))
        assert s.y[0] == 112 and s.y[-1] == 432


class TestCsv:
    def test_timestamp_column_becomes_index(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("# comment\nmonth,value\n1949-01,3\n1949-02,4.5\n")
        s = load_csv(p, x_column="month")
        np.testing.assert_array_equal(s.x, [0.0, 1.0])
        np.testing.assert_array_equal(s.y, [3.0, 4.5])

    def test_missing_column(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(KeyError):
            load_csv(p, y_column="c")

    def test_empty(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("")
        assert load_csv(p).n == 0

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_dataset(str(tmp_path / "nope.csv"))


class TestSynthetic:
    def test_bumps_snr_and_areas(self):
        s = bumps(1024, snr=7.0, seed=3)
        np.testing.assert_allclose(np.std(s.f), 7.0, rtol=1e-12)
        scale = s.f[0] / bumps_function(s.x[:1])[0]
        # integral of the first spike (height 4, width 0.005) over the real line
        h, w = 4.0, 0.005
        val, _ = integrate.quad(lambda u: h * (1 + abs(u) / w) ** -4, -np.inf, np.inf)
        np.testing.assert_allclose(s.meta["areas"][0], scale * val, rtol=1e-8)

    def test_two_peak_noise_only_on_train(self):
        s = two_peak(seed=1)
        assert s.n == 512 and s.meta["n_train"] == 256
        np.testing.assert_array_equal(s.y[256:], s.f[256:])
        resid = s.y[:256] - s.f[:256]
        np.testing.assert_allclose(s.noise_std ** 2, TWO_PEAK_KERNEL.variance / 0.85)
        assert 0.7 < np.std(resid) / s.noise_std < 1.3

    def test_sound_deterministic(self):
        a, b = sound(4096, seed=2), sound(4096, seed=2)
        np.testing.assert_array_equal(a.y, b.y)
        assert a.n == 4096

    def test_builtin_names(self):
        assert load_dataset("bumps", n=256).n == 256
        assert load_dataset("sound", n=1000).n == 1000
