"""Monte Carlo experiment harness.

Two experiments are provided: system identification of a random plant
under optional impulsive interference, and adaptive cancellation of
shaped impulsive noise from a sparse pulse signal.  Both average across
seeded runs, share the noise realizations between algorithms within a
run (paired comparisons), and reduce in run order so results are exactly
reproducible.

Seed derivation: run ``i`` of a scenario with seed ``s`` draws stream
``k`` from ``numpy.random.default_rng([s ^ i, k])`` with stream ids
1 = filter input, 2 = background noise, 3 = impulses, 4 = pulse signal;
the plant itself uses ``[s, 0]`` and is shared by all runs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .counting import OpCounter, OpsPerIteration, per_iteration
from .dcd import DcdParams
from .estimator import AseParams
from .filters import (
    FilterConfig,
    FilterState,
    dcd_ase_step,
    filter_init,
    iwf_ase_step,
    iwf_step,
    rmcc_step,
    update_ratio,
)
from .signals import (
    BgNoiseSpec,
    PdPulseSpec,
    ScenarioSpec,
    gen_background,
    gen_bg_noise,
    gen_pd_pulses,
    gen_system,
    iir_shape,
    regressors,
)

__all__ = [
    "ALGORITHMS",
    "NMSD_FLOOR_DB",
    "AlgoSpec",
    "AncSpec",
    "NominalOps",
    "RunRecord",
    "nmsd",
    "steady_state",
    "make_sysid_scenario",
    "default_algorithms",
    "random_spd_system",
    "run_sysid",
    "run_anc",
    "count_ops",
]

ALGORITHMS = ("iwf", "iwf_ase", "dcd_ase", "rmcc")
NMSD_FLOOR_DB = -400.0
_FLOOR_RATIO = 1e-40


@dataclass(frozen=True)
class AlgoSpec:
    """One algorithm entry of an experiment.

    ``kernel_sigma`` only applies to the Gaussian-weighted baseline; when
    None it defaults to twice the background noise deviation of the
    scenario (or 2.0 when the scenario has no background noise).
    """

    kind: str
    config: FilterConfig
    kernel_sigma: float | None = None
    label: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ALGORITHMS:
            raise ValueError(f"kind must be one of {ALGORITHMS}, got {self.kind!r}")

    @property
    def name(self) -> str:
        return self.label if self.label is not None else self.kind


@dataclass(frozen=True, eq=False)
class AncSpec:
    """Noise-cancellation experiment: sparse pulse signal observed through
    additive impulsive noise, with a shaped version of the same noise as
    the filter reference.

    When ``primary`` and ``reference`` are given they replace the synthetic
    signals (single run); ``clean`` then defines the cancellation target
    for the residual error metric (zeros when unknown).
    """

    horizon: int
    mc_runs: int
    seed: int
    filter_length: int = 5
    impulses: BgNoiseSpec = BgNoiseSpec(0.1, 25.0)
    shaping_a1: float = 0.2
    pulse_rate: float = 0.002
    pulse: PdPulseSpec = PdPulseSpec()
    primary: np.ndarray | None = None
    reference: np.ndarray | None = None
    clean: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not (isinstance(self.horizon, int) and self.horizon >= 1):
            raise ValueError(f"horizon must be a positive integer, got {self.horizon!r}")
        if not (isinstance(self.mc_runs, int) and self.mc_runs >= 1):
            raise ValueError(f"mc_runs must be a positive integer, got {self.mc_runs!r}")
        if not (isinstance(self.filter_length, int) and self.filter_length >= 1):
            raise ValueError(f"filter_length must be a positive integer, got {self.filter_length!r}")
        if not (0.0 <= self.pulse_rate <= 1.0):
            raise ValueError(f"pulse_rate must lie in [0, 1], got {self.pulse_rate!r}")
        external = [v is not None for v in (self.primary, self.reference)]
        if any(external):
            if not all(external):
                raise ValueError("primary and reference must be given together")
            p = np.asarray(self.primary, dtype=float)
            r = np.asarray(self.reference, dtype=float)
            if p.shape != r.shape or p.ndim != 1:
                raise ValueError("primary and reference must be vectors of equal length")
            if self.mc_runs != 1:
                raise ValueError("external waveforms require mc_runs == 1")
            object.__setattr__(self, "primary", p)
            object.__setattr__(self, "reference", r)
            if self.clean is not None:
                c = np.asarray(self.clean, dtype=float)
                if c.shape != p.shape:
                    raise ValueError("clean must match primary in length")
                object.__setattr__(self, "clean", c)


@dataclass
class RunRecord:
    """Averaged outcome of one algorithm over all Monte Carlo runs."""

    algorithm: str
    nmsd_db: np.ndarray | None
    mse: np.ndarray
    update_ratio: float
    applied_rate: np.ndarray
    wall_time: float
    op_counts: OpsPerIteration | None = None


@dataclass(frozen=True)
class NominalOps:
    """Per-iteration operation counts of the textbook implementations."""

    adds: float
    mults: float


def nmsd(w: np.ndarray, w_o: np.ndarray) -> float:
    """Normalized mean-square deviation in dB, floored at -400 dB."""
    w = np.asarray(w, dtype=float)
    w_o = np.asarray(w_o, dtype=float)
    if w.shape != w_o.shape or w.ndim != 1:
        raise ValueError("w and w_o must be vectors of equal length")
    denom = float(w_o @ w_o)
    if denom == 0.0:
        raise ValueError("w_o must be nonzero")
    diff = w - w_o
    ratio = float(diff @ diff) / denom
    return 10.0 * math.log10(max(ratio, _FLOOR_RATIO))


def steady_state(series: np.ndarray) -> float:
    """Mean over the last tenth of a series (at least one sample)."""
    series = np.asarray(series, dtype=float)
    if series.ndim != 1 or series.size == 0:
        raise ValueError("series must be a nonempty vector")
    tail = max(1, series.size // 10)
    return float(np.mean(series[-tail:]))


def make_sysid_scenario(
    length: int = 10,
    horizon: int = 5000,
    mc_runs: int = 100,
    seed: int = 20240923,
    snr_db: float = 0.0,
    impulse_prob: float = 0.1,
    impulse_var: float = 1e4,
    with_impulses: bool = True,
) -> ScenarioSpec:
    """Standard identification scenario: unit-norm random plant, white input,
    background noise at ``snr_db`` and optional Bernoulli-Gaussian impulses."""
    taps = gen_system(length, [seed, 0])
    impulses = BgNoiseSpec(impulse_prob, impulse_var) if with_impulses else None
    return ScenarioSpec(
        system_taps=taps,
        horizon=horizon,
        mc_runs=mc_runs,
        seed=seed,
        snr_db=snr_db,
        impulses=impulses,
    )


def default_algorithms(
    length: int,
    kinds: tuple[str, ...] = ALGORITHMS,
    *,
    lam: float = 0.999,
    rho: float = 1e-4,
    c: float = 2.0,
    zeta: float = 1e-4,
    h: float = 2.0,
    m_bits: int = 8,
    n_updates: int = 8,
    kernel_sigma: float | None = None,
    dcd_update: str = "shift",
    delta_schedule: str = "decaying",
    vss_guard: float = 1e-12,
) -> list[AlgoSpec]:
    """Build the benchmark algorithm set with shared parameters."""
    ase = AseParams(c=c, zeta=zeta)
    dcd = DcdParams(h=h, m_bits=m_bits, n_updates=n_updates)
    specs = []
    for kind in kinds:
        cfg = FilterConfig(
            length=length,
            lam=lam,
            rho=rho,
            ase=ase,
            dcd=dcd if kind == "dcd_ase" else None,
            vss_guard=vss_guard,
            delta_schedule=delta_schedule,
            dcd_update=dcd_update,
        )
        specs.append(AlgoSpec(kind=kind, config=cfg, kernel_sigma=kernel_sigma))
    return specs


def _make_stepper(
    spec: AlgoSpec, bg_std: float
) -> Callable[[FilterState, np.ndarray, float], tuple[FilterState, object]]:
    cfg = spec.config
    if spec.kind == "iwf":
        return lambda st, x, d: iwf_step(st, cfg, x, d)
    if spec.kind == "iwf_ase":
        return lambda st, x, d: iwf_ase_step(st, cfg, x, d)
    if spec.kind == "dcd_ase":
        return lambda st, x, d: dcd_ase_step(st, cfg, x, d)
    sigma = spec.kernel_sigma
    if sigma is None:
        # Wide kernel: only gross outliers (an order of magnitude beyond
        # the nominal error scale) are meaningfully downweighted.
        sigma = 10.0 * bg_std if bg_std > 0.0 else 10.0
    return lambda st, x, d: rmcc_step(st, cfg, x, d, sigma)


def run_sysid(
    scenario: ScenarioSpec,
    algorithms: list[AlgoSpec],
    *,
    instrument: bool = False,
) -> list[RunRecord]:
    """Identify the scenario plant with every algorithm and average the
    squared deviation trajectories across runs (in the linear domain,
    converted to dB at the end)."""
    if not algorithms:
        raise ValueError("algorithms must not be empty")
    w_o = scenario.system_taps
    length = w_o.shape[0]
    for spec in algorithms:
        if spec.config.length != length:
            raise ValueError(
                f"algorithm {spec.name!r} has length {spec.config.length}, scenario needs {length}"
            )
    horizon = scenario.horizon
    runs = scenario.mc_runs
    signal_power = float(w_o @ w_o)
    bg_std = math.sqrt(signal_power * 10.0 ** (-scenario.snr_db / 10.0))

    steppers = [_make_stepper(spec, bg_std) for spec in algorithms]
    counters = [OpCounter() if instrument else None for _ in algorithms]
    dev_sum = [np.zeros(horizon) for _ in algorithms]
    mse_sum = [np.zeros(horizon) for _ in algorithms]
    applied_sum = [np.zeros(horizon) for _ in algorithms]
    ur_sum = [0.0 for _ in algorithms]
    wall = [0.0 for _ in algorithms]

    for run in range(runs):
        base = scenario.seed ^ run
        u = np.random.default_rng([base, 1]).standard_normal(horizon)
        x_rows = regressors(u, length)
        d = x_rows @ w_o
        d += gen_background(horizon, scenario.snr_db, signal_power, [base, 2])
        if scenario.impulses is not None:
            d += gen_bg_noise(horizon, scenario.impulses, [base, 3])

        for idx, spec in enumerate(algorithms):
            state = filter_init(spec.config, ops=counters[idx])
            step = steppers[idx]
            dev = dev_sum[idx]
            mse = mse_sum[idx]
            applied = applied_sum[idx]
            t0 = time.perf_counter()
            for t in range(horizon):
                state, out = step(state, x_rows[t], d[t])
                diff = out.weights_snapshot - w_o
                dev[t] += float(diff @ diff)
                mse[t] += out.prior_error * out.prior_error
                if out.applied:
                    applied[t] += 1.0
            wall[idx] += time.perf_counter() - t0
            ur_sum[idx] += update_ratio(state)

    records = []
    for idx, spec in enumerate(algorithms):
        mean_dev = dev_sum[idx] / (runs * signal_power)
        nmsd_db = 10.0 * np.log10(np.maximum(mean_dev, _FLOOR_RATIO))
        ops = None
        if instrument:
            ops = per_iteration(counters[idx], runs * horizon)
        records.append(
            RunRecord(
                algorithm=spec.name,
                nmsd_db=nmsd_db,
                mse=mse_sum[idx] / runs,
                update_ratio=ur_sum[idx] / runs,
                applied_rate=applied_sum[idx] / runs,
                wall_time=wall[idx],
                op_counts=ops,
            )
        )
    return records


def run_anc(
    anc: AncSpec,
    algorithms: list[AlgoSpec],
    *,
    instrument: bool = False,
) -> tuple[list[RunRecord], dict[str, np.ndarray]]:
    """Cancel shaped impulsive noise from a sparse pulse signal.

    The observed signal is ``pulses + impulses`` and the filter reference
    is the impulse train passed through the shaping difference filter, so
    the cancellation error converges to the pulse signal.  The ``mse``
    series of each record is the mean squared residual between the
    filter error and the clean pulses.  Returns the records plus the
    first run's waveforms (primary, clean, reference and one denoised
    trace per algorithm).
    """
    if not algorithms:
        raise ValueError("algorithms must not be empty")
    length = anc.filter_length
    for spec in algorithms:
        if spec.config.length != length:
            raise ValueError(
                f"algorithm {spec.name!r} has length {spec.config.length}, experiment needs {length}"
            )
    horizon = anc.horizon if anc.primary is None else anc.primary.shape[0]
    runs = anc.mc_runs

    steppers = [_make_stepper(spec, 0.0) for spec in algorithms]
    counters = [OpCounter() if instrument else None for _ in algorithms]
    se_sum = [np.zeros(horizon) for _ in algorithms]
    applied_sum = [np.zeros(horizon) for _ in algorithms]
    ur_sum = [0.0 for _ in algorithms]
    wall = [0.0 for _ in algorithms]
    waveforms: dict[str, np.ndarray] = {}

    for run in range(runs):
        base = anc.seed ^ run
        if anc.primary is not None:
            d = anc.primary
            reference = anc.reference
            clean = anc.clean if anc.clean is not None else np.zeros(horizon)
        else:
            impulses = gen_bg_noise(horizon, anc.impulses, [base, 3])
            reference = iir_shape(impulses, anc.shaping_a1)
            clean = gen_pd_pulses(horizon, anc.pulse_rate, [base, 4], anc.pulse)
            d = clean + impulses
        x_rows = regressors(reference, length)

        if run == 0:
            waveforms["primary"] = np.array(d, dtype=float)
            waveforms["clean"] = np.array(clean, dtype=float)
            waveforms["reference"] = np.array(reference, dtype=float)

        for idx, spec in enumerate(algorithms):
            state = filter_init(spec.config, ops=counters[idx])
            step = steppers[idx]
            se = se_sum[idx]
            applied = applied_sum[idx]
            denoised = np.zeros(horizon) if run == 0 else None
            t0 = time.perf_counter()
            for t in range(horizon):
                state, out = step(state, x_rows[t], d[t])
                err = out.prior_error
                if denoised is not None:
                    denoised[t] = err
                resid = err - clean[t]
                se[t] += resid * resid
                if out.applied:
                    applied[t] += 1.0
            wall[idx] += time.perf_counter() - t0
            ur_sum[idx] += update_ratio(state)
            if denoised is not None:
                waveforms[f"denoised_{spec.name}"] = denoised

    records = []
    for idx, spec in enumerate(algorithms):
        ops = None
        if instrument:
            ops = per_iteration(counters[idx], runs * horizon)
        records.append(
            RunRecord(
                algorithm=spec.name,
                nmsd_db=None,
                mse=se_sum[idx] / runs,
                update_ratio=ur_sum[idx] / runs,
                applied_rate=applied_sum[idx] / runs,
                wall_time=wall[idx],
                op_counts=ops,
            )
        )
    return records, waveforms


def random_spd_system(length: int, cond: float, seed) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Random symmetric positive-definite test system.

    Eigenvalues are spread linearly over [1, cond] on a random orthogonal
    basis.  Returns ``(matrix, solution, right_hand_side)``.
    """
    if not (isinstance(length, int) and length >= 1):
        raise ValueError(f"length must be a positive integer, got {length!r}")
    if not (math.isfinite(cond) and cond >= 1.0):
        raise ValueError(f"cond must be >= 1, got {cond!r}")
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((length, length)))
    eigs = np.linspace(1.0, float(cond), length)
    matrix = (q * eigs) @ q.T
    matrix = 0.5 * (matrix + matrix.T)
    solution = rng.standard_normal(length)
    return matrix, solution, matrix @ solution


def count_ops(kind: str, length: int, dcd: DcdParams | None = None) -> NominalOps:
    """Per-iteration addition and multiplication counts of the textbook
    forms of each algorithm, as polynomial functions of the filter length
    and, for the coordinate-descent variants, the solver budget."""
    if not (isinstance(length, int) and length >= 1):
        raise ValueError(f"length must be a positive integer, got {length!r}")
    L = float(length)
    if kind == "rmcc":
        return NominalOps(adds=3 * L * L + 7 * L + 4, mults=3 * L * L + 13 * L + 12)
    if kind == "iwf":
        return NominalOps(adds=3 * L * L + 4 * L, mults=3.5 * L * L + 6 * L)
    if kind == "iwf_ase":
        return NominalOps(adds=3 * L * L + 4 * L, mults=3.5 * L * L + 8 * L + 3)
    if kind in ("dcd_rmcc", "dcd_ase"):
        if dcd is None:
            raise ValueError(f"count_ops({kind!r}) requires DcdParams")
        nu = float(dcd.n_updates)
        mb = float(dcd.m_bits)
        if kind == "dcd_rmcc":
            return NominalOps(adds=3 * L + 2 * nu * L + mb, mults=7 * L + 5)
        return NominalOps(adds=3 * L + 2 * nu * L + mb + 1, mults=7 * L + 6)
    raise ValueError(f"unknown algorithm kind {kind!r}")
