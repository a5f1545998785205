"""Signal and scenario generators for the benchmark experiments.

Everything here is deterministic given a seed.  Seeds may be plain
integers or integer sequences; they are fed to ``numpy.random.default_rng``
unchanged, and the experiment harness derives per-run, per-stream seeds as
``[scenario_seed ^ run_index, stream_id]`` so that runs and streams are
independent but reproducible.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BgNoiseSpec",
    "PdPulseSpec",
    "ScenarioSpec",
    "gen_system",
    "gen_bg_noise",
    "gen_background",
    "iir_shape",
    "gen_pd_pulses",
    "regressors",
    "save_waveform",
    "load_waveform",
]

SeedLike = "int | list[int] | tuple[int, ...]"


@dataclass(frozen=True)
class BgNoiseSpec:
    """Bernoulli-Gaussian impulse process: occurrence probability and variance of the Gaussian amplitude."""

    p_r: float
    sigma2: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_r <= 1.0):
            raise ValueError(f"p_r must lie in [0, 1], got {self.p_r!r}")
        if not (math.isfinite(self.sigma2) and self.sigma2 >= 0.0):
            raise ValueError(f"sigma2 must be finite and nonnegative, got {self.sigma2!r}")


@dataclass(frozen=True)
class PdPulseSpec:
    """Shape of one synthetic partial-discharge pulse (damped oscillation).

    ``amplitude`` is the exact peak magnitude of the pulse; the template is
    normalized so its largest sample equals it.
    """

    amplitude: float = 10.0
    decay: float = 20.0
    freq: float = 0.05
    length: int = 120

    def __post_init__(self) -> None:
        if not (math.isfinite(self.amplitude) and self.amplitude > 0):
            raise ValueError(f"amplitude must be positive, got {self.amplitude!r}")
        if not (math.isfinite(self.decay) and self.decay > 0):
            raise ValueError(f"decay must be positive, got {self.decay!r}")
        if not (0.0 < self.freq < 0.5):
            raise ValueError(f"freq must lie in (0, 0.5) cycles/sample, got {self.freq!r}")
        if not (isinstance(self.length, int) and self.length >= 2):
            raise ValueError(f"length must be an integer >= 2, got {self.length!r}")


@dataclass(frozen=True, eq=False)
class ScenarioSpec:
    """System-identification scenario: unknown plant plus noise model.

    The input process is pinned to unit-variance white Gaussian noise, the
    only input model used by the experiments.  ``snr_db`` sets the white
    background noise level relative to the clean plant output power, and
    ``impulses`` optionally adds Bernoulli-Gaussian interference on top.
    """

    system_taps: np.ndarray
    horizon: int
    mc_runs: int
    seed: int
    snr_db: float = 0.0
    impulses: BgNoiseSpec | None = None

    def __post_init__(self) -> None:
        taps = np.asarray(self.system_taps, dtype=float)
        if taps.ndim != 1 or taps.size == 0 or not np.all(np.isfinite(taps)):
            raise ValueError("system_taps must be a nonempty finite vector")
        if not np.any(taps != 0.0):
            raise ValueError("system_taps must not be all zero")
        object.__setattr__(self, "system_taps", taps)
        if not (isinstance(self.horizon, int) and self.horizon >= 1):
            raise ValueError(f"horizon must be a positive integer, got {self.horizon!r}")
        if not (isinstance(self.mc_runs, int) and self.mc_runs >= 1):
            raise ValueError(f"mc_runs must be a positive integer, got {self.mc_runs!r}")
        if not math.isfinite(self.snr_db):
            raise ValueError(f"snr_db must be finite, got {self.snr_db!r}")


def gen_system(length: int, seed) -> np.ndarray:
    """Draw a random plant: standard normal taps scaled to unit Euclidean norm."""
    if not (isinstance(length, int) and length >= 1):
        raise ValueError(f"length must be a positive integer, got {length!r}")
    rng = np.random.default_rng(seed)
    taps = rng.standard_normal(length)
    norm = float(np.linalg.norm(taps))
    if norm == 0.0:  # astronomically unlikely, retry deterministically
        taps = rng.standard_normal(length) + 1e-3
        norm = float(np.linalg.norm(taps))
    return taps / norm


def gen_bg_noise(n: int, spec: BgNoiseSpec, seed) -> np.ndarray:
    """Bernoulli-Gaussian impulse train: occurrence mask times Gaussian amplitudes."""
    if not (isinstance(n, int) and n >= 0):
        raise ValueError(f"n must be a nonnegative integer, got {n!r}")
    rng = np.random.default_rng(seed)
    mask = rng.random(n) < spec.p_r
    amplitudes = rng.standard_normal(n) * math.sqrt(spec.sigma2)
    return np.where(mask, amplitudes, 0.0)


def gen_background(n: int, snr_db: float, signal_power: float, seed) -> np.ndarray:
    """White Gaussian noise sized so that ``signal_power`` over its variance hits ``snr_db``."""
    if not (isinstance(n, int) and n >= 0):
        raise ValueError(f"n must be a nonnegative integer, got {n!r}")
    if not (math.isfinite(signal_power) and signal_power > 0):
        raise ValueError(f"signal_power must be positive, got {signal_power!r}")
    variance = signal_power * 10.0 ** (-snr_db / 10.0)
    rng = np.random.default_rng(seed)
    return rng.standard_normal(n) * math.sqrt(variance)


def iir_shape(x: np.ndarray, a1: float = 0.2) -> np.ndarray:
    """First-difference shaping ``y[t] = x[t] - a1 * x[t-1]`` with zero prehistory."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be a vector")
    y = x.copy()
    y[1:] -= a1 * x[:-1]
    return y


def gen_pd_pulses(n: int, pulse_rate: float, seed, pulse: PdPulseSpec = PdPulseSpec()) -> np.ndarray:
    """Sparse train of damped-oscillation pulses.

    Each sample independently starts a pulse with probability ``pulse_rate``;
    overlapping pulses superpose.  The template is
    ``exp(-t / decay) * sin(2 pi freq t)`` scaled so its peak magnitude
    equals ``pulse.amplitude`` exactly.
    """
    if not (isinstance(n, int) and n >= 0):
        raise ValueError(f"n must be a nonnegative integer, got {n!r}")
    if not (0.0 <= pulse_rate <= 1.0):
        raise ValueError(f"pulse_rate must lie in [0, 1], got {pulse_rate!r}")
    t = np.arange(pulse.length, dtype=float)
    template = np.exp(-t / pulse.decay) * np.sin(2.0 * math.pi * pulse.freq * t)
    peak = float(np.max(np.abs(template)))
    template = template * (pulse.amplitude / peak)
    rng = np.random.default_rng(seed)
    starts = np.flatnonzero(rng.random(n) < pulse_rate)
    out = np.zeros(n)
    for s in starts:
        stop = min(n, s + pulse.length)
        out[s:stop] += template[: stop - s]
    return out


def regressors(x: np.ndarray, length: int) -> np.ndarray:
    """Tapped-delay-line matrix: row ``t`` is ``[x[t], x[t-1], ..., x[t-length+1]]`` with zero prehistory."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be a vector")
    if not (isinstance(length, int) and length >= 1):
        raise ValueError(f"length must be a positive integer, got {length!r}")
    n = x.shape[0]
    out = np.zeros((n, length))
    for k in range(length):
        out[k:, k] = x[: n - k]
    return out


def save_waveform(path, x: np.ndarray) -> None:
    """Write one sample per row as ``index,value`` CSV with a header."""
    x = np.asarray(x, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "value"])
        for i, v in enumerate(x):
            writer.writerow([i, format(float(v), ".17g")])


def load_waveform(path) -> np.ndarray:
    """Read a waveform written by :func:`save_waveform` (or any index,value CSV)."""
    values: list[float] = []
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty waveform file")
        for row in reader:
            if len(row) < 2:
                raise ValueError(f"{path}: malformed row {row!r}")
            values.append(float(row[1]))
    return np.asarray(values)
