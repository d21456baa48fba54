"""Bundled and synthetic datasets used by the experiments and the CLI."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .kernels import LAPLACIAN, SpectralMixtureKernel
from .gp import sample_gp

__all__ = [
    "Series",
    "load_csv",
    "airline",
    "BUMPS_LOCATIONS",
    "bumps_function",
    "bumps",
    "TWO_PEAK_KERNEL",
    "two_peak",
    "sound",
    "BUILTIN",
    "load_dataset",
]


@dataclass
class Series:
    """A univariate series; ``f`` holds the noiseless signal when known."""

    x: np.ndarray
    y: np.ndarray
    f: np.ndarray | None = None
    noise_std: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.x.size


def _as_float(values):
    try:
        return np.array([float(v) for v in values])
    except ValueError:
        return None


def load_csv(path, x_column: str | None = None, y_column: str | None = None) -> Series:
    """Read a headed CSV.

    ``y_column`` defaults to the last column.  Without ``x_column``, or when
    that column is not numeric (timestamps), inputs are unit-spaced indices.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(row for row in fh if not row.startswith("#")))
    if not rows:
        return Series(np.zeros(0), np.zeros(0))
    header, body = rows[0], [r for r in rows[1:] if r]
    ycol = y_column or header[-1]
    if ycol not in header:
        raise KeyError(f"column {ycol!r} not in {header}")
    y = _as_float([r[header.index(ycol)] for r in body])
    if y is None:
        raise ValueError(f"column {ycol!r} is not numeric")
    x = None
    if x_column is not None:
        if x_column not in header:
            raise KeyError(f"column {x_column!r} not in {header}")
        x = _as_float([r[header.index(x_column)] for r in body])
    if x is None:
        x = np.arange(y.size, dtype=float)
    return Series(x, y, meta={"source": str(path)})


def airline() -> Series:
    """Monthly international airline passengers 1949-1960 (144 values), x = month index."""
    ref = resources.files("levykernel") / "data" / "airline.csv"
    with resources.as_file(ref) as p:
        s = load_csv(p, y_column="passengers")
    s.meta["source"] = "airline"
    return s


BUMPS_LOCATIONS = np.array([0.10, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81])
_BUMPS_HEIGHT = np.array([4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2])
_BUMPS_WIDTH = np.array([0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005])


def bumps_function(x, scale: float = 1.0) -> np.ndarray:
    """Sum of spikes ``h (1 + |x - t| / w)^-4`` at the standard locations."""
    x = np.asarray(x, dtype=float)[..., None]
    return scale * (_BUMPS_HEIGHT * (1.0 + np.abs(x - BUMPS_LOCATIONS) / _BUMPS_WIDTH) ** -4).sum(axis=-1)


def bumps(n: int = 1024, snr: float = 7.0, seed: int = 0) -> Series:
    """Spike test function on ``[0, 1)``, scaled to ``sd(f) = snr``, plus unit noise.

    ``meta["areas"]`` holds the integral of each scaled spike.
    """
    x = np.arange(n) / n
    raw = bumps_function(x)
    scale = snr / np.std(raw)
    f = scale * raw
    rng = np.random.default_rng(seed)
    y = f + rng.standard_normal(n)
    areas = scale * _BUMPS_HEIGHT * _BUMPS_WIDTH * (2.0 / 3.0)
    return Series(x, y, f, 1.0, {"source": "bumps", "locations": BUMPS_LOCATIONS.copy(), "areas": areas})


TWO_PEAK_KERNEL = SpectralMixtureKernel.from_arrays(
    [1.0, 1.0], [0.115, 0.30], [200.0, 200.0], LAPLACIAN, 0.0
)


def two_peak(n_train: int = 256, n_test: int = 256, snr: float = 0.85, seed: int = 0,
             kernel: SpectralMixtureKernel = TWO_PEAK_KERNEL) -> Series:
    """GP draw from a two-peak kernel on unit-spaced inputs.

    Only the first ``n_train`` values are contaminated with white noise of
    variance ``k(0)/snr``; the rest are the noiseless signal.
    """
    rng = np.random.default_rng(seed)
    n = n_train + n_test
    x = np.arange(n, dtype=float)
    f = sample_gp(kernel, x, rng)
    sd = float(np.sqrt(kernel.variance / snr))
    y = f.copy()
    y[:n_train] += sd * rng.standard_normal(n_train)
    return Series(x, y, f, sd, {"source": "two_peak", "n_train": n_train, "chi": kernel.chi.copy()})


def sound(n: int = 32768, seed: int = 0, noise_std: float = 0.2) -> Series:
    """Sound-like waveform: repeatedly excited decaying tones plus white noise.

    Tone frequencies stay below 0.02 cycles/sample so a grid of a few
    thousand inducing points resolves them at ``n = 32768``.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(n, dtype=float)
    freqs = np.array([0.002, 0.0045, 0.008, 0.013])
    amps = np.array([1.0, 0.6, 0.4, 0.25])
    decay = np.array([1600.0, 1200.0, 900.0, 600.0])
    f = np.zeros(n)
    period = 2048
    for fr, a, d in zip(freqs, amps, decay):
        phase = rng.uniform(0, 2 * np.pi, size=n // period + 1)
        k = (t // period).astype(int)
        f += a * np.exp(-(t % period) / d) * np.cos(2 * np.pi * fr * t + phase[k])
    y = f + noise_std * rng.standard_normal(n)
    return Series(t, y, f, noise_std, {"source": "sound", "freqs": freqs})


BUILTIN = {"airline", "bumps", "two_peak", "sound"}


def load_dataset(name_or_path: str, x_column=None, y_column=None, n=None, seed: int = 0) -> Series:
    """Built-in dataset by name, otherwise a CSV file path."""
    if name_or_path == "airline":
        return airline()
    if name_or_path == "bumps":
        return bumps(n or 1024, seed=seed)
    if name_or_path == "two_peak":
        return two_peak(seed=seed)
    if name_or_path == "sound":
        return sound(n or 32768, seed=seed)
    return load_csv(name_or_path, x_column, y_column)
