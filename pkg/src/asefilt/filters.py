"""Recursive weighted least-squares filters with a saturating error weighting.

Two families are implemented on top of the same exponentially weighted
statistics ``R(n)`` (input autocorrelation) and ``theta(n)`` (input/output
cross-correlation):

* ``iwf_*`` steps solve the normal equations iteratively with a variable
  step size computed from the residual ``theta - R w`` (one multiply-heavy
  but inversion-free update per sample).
* ``dcd_ase_step`` replaces the residual iteration by a budgeted
  dichotomous coordinate descent solve and maintains the solver residual
  across samples, bringing the per-sample cost down to O(length) when the
  shift-structured correlation update is used.

Robustness comes from the per-sample weighting factor: samples whose prior
error magnitude exceeds ``pi * c`` contribute nothing to the updated
statistics (the matrices still decay), so isolated impulses cannot corrupt
them.  The ``iwf_*`` steps weight the full sample; the coordinate-descent
variant's default shift-structured mode weights the error injection only,
which keeps its O(length) recursions exact (see ``dcd_ase_step``).

All steps mutate the passed state in place and return it together with a
:class:`StepOutput`; states are single-owner and not thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .counting import OpCounter
from .dcd import DcdParams, dcd_solve
from .estimator import AseParams, ase_weight

__all__ = [
    "FilterError",
    "NoStepsError",
    "FilterConfig",
    "FilterState",
    "StepOutput",
    "filter_init",
    "correlation_update",
    "iwf_ase_step",
    "dcd_ase_step",
    "iwf_step",
    "rmcc_step",
    "update_ratio",
]

DELTA_SCHEDULES = ("decaying", "constant")
DCD_UPDATE_MODES = ("shift", "dense")


class FilterError(Exception):
    """Base class for filter usage errors."""


class NoStepsError(FilterError):
    """Raised when a per-run statistic is requested before any step ran."""


@dataclass(frozen=True)
class FilterConfig:
    """Static configuration shared by all steps of one filter instance.

    Parameters
    ----------
    length : int
        Number of adaptive taps.
    lam : float
        Forgetting factor in (0, 1).
    rho : float
        Positive initial value of the autocorrelation diagonal; also the
        regularization level of the leakage schedules.
    ase : AseParams
        Error-weighting parameters.
    dcd : DcdParams, optional
        Solver budget; required by :func:`dcd_ase_step` only.
    vss_guard : float
        Additive guard in the variable-step-size denominator.
    delta_schedule : str
        Leakage sequence of the coordinate-descent variant:
        ``"decaying"`` uses delta(n) = lam**(n+1) * rho, whose
        consecutive-difference correction cancels exactly, while
        ``"constant"`` holds delta(n) = rho and applies the resulting
        (1 - lam) * rho correction every step.
    dcd_update : str
        Correlation update used by :func:`dcd_ase_step`: ``"shift"`` is the
        O(length) tapped-delay-line update (unweighted statistics, error-side
        robustness), ``"dense"`` is the sample-weighted full-rank-one update.
    """

    length: int
    lam: float
    rho: float
    ase: AseParams
    dcd: DcdParams | None = None
    vss_guard: float = 1e-12
    delta_schedule: str = "decaying"
    dcd_update: str = "shift"

    def __post_init__(self) -> None:
        if not (isinstance(self.length, int) and self.length >= 1):
            raise ValueError(f"length must be a positive integer, got {self.length!r}")
        if not (isinstance(self.lam, (int, float)) and 0.0 < self.lam < 1.0):
            raise ValueError(f"lam must lie strictly inside (0, 1), got {self.lam!r}")
        if not (isinstance(self.rho, (int, float)) and math.isfinite(self.rho) and self.rho > 0):
            raise ValueError(f"rho must be positive and finite, got {self.rho!r}")
        if not isinstance(self.ase, AseParams):
            raise ValueError("ase must be an AseParams instance")
        if self.dcd is not None and not isinstance(self.dcd, DcdParams):
            raise ValueError("dcd must be a DcdParams instance or None")
        if not (math.isfinite(self.vss_guard) and self.vss_guard > 0):
            raise ValueError(f"vss_guard must be positive, got {self.vss_guard!r}")
        if self.delta_schedule not in DELTA_SCHEDULES:
            raise ValueError(
                f"delta_schedule must be one of {DELTA_SCHEDULES}, got {self.delta_schedule!r}"
            )
        if self.dcd_update not in DCD_UPDATE_MODES:
            raise ValueError(
                f"dcd_update must be one of {DCD_UPDATE_MODES}, got {self.dcd_update!r}"
            )


@dataclass
class FilterState:
    """Mutable per-filter state; create via :func:`filter_init`."""

    w: np.ndarray
    r_matrix: np.ndarray
    theta: np.ndarray
    residual: np.ndarray
    delta_prev: float
    step_index: int = 0
    updates_total: int = 0
    updates_applied: int = 0
    ops: OpCounter | None = None


@dataclass(frozen=True)
class StepOutput:
    """What one step tells the caller: the prior error, whether the
    rank-one statistics update was applied, and a copy of the weights."""

    prior_error: float
    applied: bool
    weights_snapshot: np.ndarray = field(repr=False)


def filter_init(config: FilterConfig, *, ops: OpCounter | None = None) -> FilterState:
    """Fresh state: zero weights, ``rho * I`` autocorrelation, zero residual."""
    length = config.length
    if config.delta_schedule == "decaying":
        delta_prev = config.lam * config.rho
    else:
        delta_prev = config.rho
    return FilterState(
        w=np.zeros(length),
        r_matrix=np.eye(length) * config.rho,
        theta=np.zeros(length),
        residual=np.zeros(length),
        delta_prev=delta_prev,
        ops=ops,
    )


def _check_sample(config: FilterConfig, x, d) -> tuple[np.ndarray, float]:
    x = np.asarray(x, dtype=float)
    if x.shape != (config.length,):
        raise ValueError(f"x must have shape ({config.length},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    d = float(d)
    if not math.isfinite(d):
        raise ValueError(f"d must be finite, got {d!r}")
    return x, d


def correlation_update(
    state: FilterState, config: FilterConfig, x: np.ndarray, d: float, phi: float
) -> FilterState:
    """Exponentially weighted statistics update.

    ``R <- lam R + phi x x^T`` and ``theta <- lam theta + phi d x``.  The
    decay always applies; ``phi`` scales the new sample's contribution.
    """
    x, d = _check_sample(config, x, d)
    phi = float(phi)
    if not (math.isfinite(phi) and phi >= 0.0):
        raise ValueError(f"phi must be finite and nonnegative, got {phi!r}")
    lam = config.lam
    n = config.length
    ops = state.ops
    state.r_matrix *= lam
    state.theta *= lam
    if ops is not None:
        ops.mults += n * n + n
    if phi != 0.0:
        v = phi * x
        state.r_matrix += np.outer(v, x)
        state.theta += (phi * d) * x
        if ops is not None:
            ops.mults += n + n * n + 1 + n
            ops.adds += n * n + n
    return state


def _decay_only(state: FilterState, config: FilterConfig) -> None:
    n = config.length
    state.r_matrix *= config.lam
    state.theta *= config.lam
    if state.ops is not None:
        state.ops.mults += n * n + n


def _prior_error(state: FilterState, x: np.ndarray, d: float) -> float:
    e = d - float(state.w @ x)
    if state.ops is not None:
        n = x.shape[0]
        state.ops.mults += n
        state.ops.adds += n
    return e


def _vss_weight_update(state: FilterState, config: FilterConfig, move: bool) -> None:
    """Move the weights along ``theta - R w`` with the step size that
    minimizes the exponentially weighted quadratic in that direction.

    With ``move`` false only the residual is refreshed and the weights
    stay put (used while the delay line is still filling)."""
    n = config.length
    ops = state.ops
    r = state.theta - state.r_matrix @ state.w
    state.residual = r
    if ops is not None:
        ops.mults += n * n
        ops.adds += n * n
    if not move:
        return
    rr = float(r @ r)
    r_big = state.r_matrix @ r
    den = float(r @ r_big) + config.vss_guard
    mu = rr / den
    state.w += mu * r
    if ops is not None:
        ops.mults += n + n * n + n + 1 + n
        ops.adds += (n - 1) + n * (n - 1) + (n - 1) + 1 + n


def _finish_iwf_step(
    state: FilterState,
    config: FilterConfig,
    x: np.ndarray,
    d: float,
    e: float,
    phi: float,
    applied: bool,
) -> tuple[FilterState, StepOutput]:
    if applied:
        correlation_update(state, config, x, d, phi)
        state.updates_applied += 1
    else:
        _decay_only(state, config)
    # Hold the weights at rest until the delay line has filled once.  With
    # only prehistory-padded regressors absorbed, the regularized
    # least-squares target is dominated by the unexcited directions and a
    # single variable-step move can land arbitrarily far out (a small
    # first input sample alone puts ||w|| near |d / x(0)|), after which a
    # saturating gate never reopens.
    _vss_weight_update(state, config, move=state.step_index >= config.length - 1)
    state.updates_total += 1
    state.step_index += 1
    return state, StepOutput(prior_error=e, applied=applied, weights_snapshot=state.w.copy())


def iwf_ase_step(
    state: FilterState, config: FilterConfig, x, d
) -> tuple[FilterState, StepOutput]:
    """One robust inversion-free step.

    Computes the prior error, folds the sample into the statistics with the
    saturating weighting factor when the error magnitude is within
    ``pi * c`` (decay only otherwise), then runs the variable-step weight
    update.  The weights stay at rest for the first ``length - 1`` steps
    while the delay line fills.
    """
    x, d = _check_sample(config, x, d)
    e = _prior_error(state, x, d)
    gate_open = abs(e) <= config.ase.cutoff
    if state.ops is not None:
        state.ops.comparisons += 1
    if gate_open:
        phi = ase_weight(e, config.ase)
        if state.ops is not None:
            state.ops.mults += 4
            state.ops.adds += 1
    else:
        phi = 0.0
    return _finish_iwf_step(state, config, x, d, e, phi, gate_open)


def iwf_step(state: FilterState, config: FilterConfig, x, d) -> tuple[FilterState, StepOutput]:
    """Non-robust baseline: identical to :func:`iwf_ase_step` with the
    weighting factor pinned to 1 and no skip logic."""
    x, d = _check_sample(config, x, d)
    e = _prior_error(state, x, d)
    return _finish_iwf_step(state, config, x, d, e, 1.0, True)


def rmcc_step(
    state: FilterState, config: FilterConfig, x, d, kernel_sigma: float
) -> tuple[FilterState, StepOutput]:
    """Baseline with a Gaussian error weighting ``exp(-e^2 / (2 sigma^2))``.

    Every sample is folded into the statistics (the Gaussian never reaches
    zero), which is what separates its behavior from the saturating
    weighting under strong impulses.
    """
    kernel_sigma = float(kernel_sigma)
    if not (math.isfinite(kernel_sigma) and kernel_sigma > 0):
        raise ValueError(f"kernel_sigma must be positive, got {kernel_sigma!r}")
    x, d = _check_sample(config, x, d)
    e = _prior_error(state, x, d)
    phi = math.exp(-(e * e) / (2.0 * kernel_sigma * kernel_sigma))
    if state.ops is not None:
        state.ops.mults += 4
    return _finish_iwf_step(state, config, x, d, e, phi, True)


def _shift_correlation_update(state: FilterState, config: FilterConfig, x: np.ndarray) -> None:
    """O(length) autocorrelation update for tapped-delay-line inputs.

    The first row follows the exact exponentially weighted recursion
    ``row0 <- lam row0 + x[0] x`` and the interior block is the previous
    matrix shifted down-right by one sample; symmetry is restored by
    mirroring the first row onto the first column.  Because consecutive
    regressors share all but one entry, the shifted block *is* the
    exponentially weighted sum for the interior lags, so the recursion
    ``R(n) = lam R(n-1) + x x^T`` holds entry-exactly (the only deviation
    is the initial ``rho I`` mass, which the interior keeps undecayed).

    The sample weighting deliberately does not appear here: scaling the
    rank-one term by a step-dependent factor breaks the shift identity
    (the interior would lag the weighting by one sample per row) and with
    it the exactness of the residual recursion that makes the
    coordinate-descent variant cheap.  Robust weighting is applied on the
    error side instead; see :func:`dcd_ase_step`.
    """
    r = state.r_matrix
    n = config.length
    ops = state.ops
    r[1:, 1:] = r[:-1, :-1].copy()
    row0 = config.lam * r[0, :] + x[0] * x
    if ops is not None:
        ops.mults += 2 * n
        ops.adds += n
    r[0, :] = row0
    r[:, 0] = row0


def dcd_ase_step(
    state: FilterState, config: FilterConfig, x, d, *, solve_fn=None
) -> tuple[FilterState, StepOutput]:
    """One low-cost robust step: budgeted coordinate-descent weight update.

    The right-hand side of the normal equations is maintained recursively
    from the previous solver residual (``rhs = lam residual + phi e x``,
    minus the leakage correction), so each step solves a small correction
    problem instead of the full system.  The saturating weighting gates the
    error injection: a sample whose prior error magnitude exceeds
    ``pi * c`` contributes nothing to the right-hand side.

    The two correlation-update modes differ in where the weighting acts:

    * ``"shift"`` (default) keeps the autocorrelation unweighted, which is
      what makes the O(length) shifted update and the residual recursion
      exact.  Equivalently, the filter tracks the normal equations for the
      error-censored desired signal ``d - (1 - phi) e``: outlier samples
      are replaced by the filter's own prediction while the (impulse-free)
      regressor statistics keep accumulating.
    * ``"dense"`` applies the weighting to the full rank-one sample update
      on both sides, at O(length^2) multiplies per step.

    In both modes the solver engages only once the delay line has filled
    (``length`` samples); solving against the rank-deficient early
    statistics launches the weights far enough that the error gate then
    blocks recovery.  ``solve_fn(r_matrix, rhs) -> (delta_w, residual_out)``
    may replace the built-in solver, e.g. with a dense exact solve for
    validation.
    """
    if config.dcd is None and solve_fn is None:
        raise FilterError("dcd_ase_step requires FilterConfig.dcd (or an explicit solve_fn)")
    x, d = _check_sample(config, x, d)
    ops = state.ops
    n = config.length
    e = _prior_error(state, x, d)
    gate_open = abs(e) <= config.ase.cutoff
    if ops is not None:
        ops.comparisons += 1
    if gate_open:
        phi = ase_weight(e, config.ase)
        if ops is not None:
            ops.mults += 4
            ops.adds += 1
    else:
        phi = 0.0

    lam = config.lam
    if config.delta_schedule == "decaying":
        delta_n = lam * state.delta_prev
    else:
        delta_n = config.rho
    correction = delta_n - lam * state.delta_prev
    if ops is not None:
        ops.mults += 2
        ops.adds += 1

    if config.dcd_update == "shift":
        _shift_correlation_update(state, config, x)
        if correction != 0.0:
            # The shifted interior keeps its leakage mass undecayed, so
            # only the freshly rebuilt leading entry needs topping up.
            state.r_matrix[0, 0] += correction
            if ops is not None:
                ops.adds += 1
    else:
        state.r_matrix *= lam
        if ops is not None:
            ops.mults += n * n
        if gate_open and phi != 0.0:
            state.r_matrix += np.outer(phi * x, x)
            if ops is not None:
                ops.mults += n + n * n
                ops.adds += n * n
        if correction != 0.0:
            state.r_matrix[np.diag_indices(n)] += correction
            if ops is not None:
                ops.adds += n

    rhs = lam * state.residual
    if ops is not None:
        ops.mults += n
    if gate_open and phi != 0.0:
        rhs += (phi * e) * x
        if ops is not None:
            ops.mults += 1 + n
            ops.adds += n
    if correction != 0.0:
        if config.dcd_update == "shift":
            rhs[0] -= correction * state.w[0]
            if ops is not None:
                ops.mults += 1
                ops.adds += 1
        else:
            rhs -= correction * state.w
            if ops is not None:
                ops.mults += n
                ops.adds += n

    if state.step_index < config.length - 1:
        # Delay line still filling: accumulate statistics only.
        state.residual = rhs
    else:
        if solve_fn is not None:
            delta_w, residual_out = solve_fn(state.r_matrix, rhs)
        else:
            result = dcd_solve(state.r_matrix, rhs, config.dcd, ops=ops)
            delta_w, residual_out = result.delta_w, result.residual_out
        state.w += delta_w
        state.residual = np.asarray(residual_out, dtype=float)
        if ops is not None:
            ops.adds += n

    state.delta_prev = delta_n
    state.updates_total += 1
    if gate_open:
        state.updates_applied += 1
    state.step_index += 1
    return state, StepOutput(prior_error=e, applied=gate_open, weights_snapshot=state.w.copy())


def update_ratio(state: FilterState) -> float:
    """Fraction of steps whose sample was folded into the statistics."""
    if state.updates_total == 0:
        raise NoStepsError("update_ratio is undefined before the first step")
    return state.updates_applied / state.updates_total
