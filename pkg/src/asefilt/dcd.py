"""Leading-element dichotomous coordinate descent (DCD) solver.

Solves ``R x = b`` approximately without multiplications or divisions in
the weight updates: candidate step sizes are powers of two between ``h``
and ``h / 2**m_bits``, and each successful update adjusts one coordinate
of the solution by the current step size while keeping the residual
``b - R x`` up to date with one scaled column subtraction.

The solver is deliberately budgeted: at most ``n_updates`` successful
coordinate updates per call, and at most ``m_bits`` step halvings.  The
filters that embed it exploit the warm-started residual that it returns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .counting import OpCounter

__all__ = ["DcdParams", "DcdSolveResult", "dcd_solve", "quantize_grid", "dcd_solve_shift_add"]


@dataclass(frozen=True)
class DcdParams:
    """Budget and step-size range of the solver.

    Parameters
    ----------
    h : float
        Largest step size (amplitude range of one solve).  Must be positive;
        powers of two keep every residual update exact in float arithmetic.
    m_bits : int
        Number of step halvings available, i.e. the word length of the
        solution increments.  The finest step is ``h / 2**m_bits``.
    n_updates : int
        Maximum number of successful coordinate updates per solve.
    """

    h: float = 2.0
    m_bits: int = 8
    n_updates: int = 8

    def __post_init__(self) -> None:
        if not (np.isfinite(self.h) and self.h > 0):
            raise ValueError(f"h must be positive and finite, got {self.h!r}")
        if not (isinstance(self.m_bits, int) and self.m_bits >= 1):
            raise ValueError(f"m_bits must be an integer >= 1, got {self.m_bits!r}")
        if not (isinstance(self.n_updates, int) and self.n_updates >= 1):
            raise ValueError(f"n_updates must be an integer >= 1, got {self.n_updates!r}")


@dataclass
class DcdSolveResult:
    """Outcome of one budgeted solve.

    Attributes
    ----------
    delta_w : numpy.ndarray
        Accumulated solution increment (every entry is a signed sum of the
        power-of-two step sizes).
    residual_out : numpy.ndarray
        ``b - R @ delta_w`` as maintained incrementally by the solver.
    updates_used : int
        Number of successful coordinate updates performed.
    exhausted_bits : bool
        True when the solve stopped because all ``m_bits`` halvings were
        spent, False when it stopped on the update budget.
    """

    delta_w: np.ndarray
    residual_out: np.ndarray
    updates_used: int
    exhausted_bits: bool


def quantize_grid(params: DcdParams) -> list[float]:
    """Step sizes the solver can apply, largest first: ``h/2, h/4, ..., h/2**m_bits``."""
    return [params.h / 2.0 ** q for q in range(1, params.m_bits + 1)]


def _validate_system(r_matrix: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r_matrix = np.asarray(r_matrix, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if r_matrix.ndim != 2 or r_matrix.shape[0] != r_matrix.shape[1]:
        raise ValueError(f"r_matrix must be square, got shape {r_matrix.shape}")
    if rhs.ndim != 1 or rhs.shape[0] != r_matrix.shape[0]:
        raise ValueError(
            f"rhs must be a vector matching r_matrix, got {rhs.shape} vs {r_matrix.shape}"
        )
    if not np.all(np.isfinite(r_matrix)) or not np.all(np.isfinite(rhs)):
        raise ValueError("r_matrix and rhs must be finite")
    if np.any(np.diag(r_matrix) <= 0.0):
        raise ValueError("r_matrix must have strictly positive diagonal entries")
    return r_matrix, rhs


def dcd_solve(
    r_matrix: np.ndarray,
    rhs: np.ndarray,
    params: DcdParams,
    *,
    ops: OpCounter | None = None,
) -> DcdSolveResult:
    """Run one budgeted leading-element DCD solve of ``r_matrix @ x = rhs``.

    The leading element is the residual entry of largest magnitude (lowest
    index on ties).  A coordinate update is accepted once the leading
    residual exceeds half the current step times the matching diagonal
    entry; until then the step is halved.  Both the step size and the
    halving count persist across updates within the call.
    """
    r_matrix, rhs = _validate_system(r_matrix, rhs)
    n = rhs.shape[0]
    delta_w = np.zeros(n)
    residual = rhs.copy()
    m = params.h / 2.0
    q = 1
    updates = 0
    exhausted = False
    if ops is not None:
        ops.mults += 1  # initial halving of h

    while updates < params.n_updates:
        lead = int(np.argmax(np.abs(residual)))
        lead_mag = abs(residual[lead])
        if ops is not None:
            ops.comparisons += n  # argmax scan
        # Halve the step until the leading residual is significant at this scale.
        while True:
            if ops is not None:
                ops.mults += 1  # 0.5 * m * R[lead, lead]
                ops.comparisons += 1
            if lead_mag > 0.5 * m * r_matrix[lead, lead]:
                break
            q += 1
            if ops is not None:
                ops.comparisons += 1  # bit budget check
            if q > params.m_bits:
                exhausted = True
                break
            m *= 0.5
            if ops is not None:
                ops.mults += 1
        if exhausted:
            break
        step = m if residual[lead] >= 0.0 else -m
        delta_w[lead] += step
        residual -= step * r_matrix[:, lead]
        updates += 1
        if ops is not None:
            ops.adds += 1 + n
            ops.mults += n
    return DcdSolveResult(
        delta_w=delta_w,
        residual_out=residual,
        updates_used=updates,
        exhausted_bits=exhausted,
    )


def dcd_solve_shift_add(
    r_matrix: np.ndarray,
    rhs: np.ndarray,
    h_exp: int,
    m_bits: int,
    n_updates: int,
) -> tuple[list[int], list[int], int, bool]:
    """Integer shadow of :func:`dcd_solve` using only shifts, adds and compares.

    ``r_matrix`` and ``rhs`` must hold integer values, and the step range is
    ``h = 2**h_exp`` with ``m_bits >= h_exp >= 0``.  Returns
    ``(delta_w_units, residual_units, updates_used, exhausted_bits)`` where
    both vectors are expressed in units of ``2**(h_exp - m_bits)``; scaling
    them by that power of two reproduces the float solver bit for bit on
    inputs small enough to be exact in doubles.
    """
    r_int = [[int(v) for v in row] for row in np.asarray(r_matrix).tolist()]
    n = len(r_int)
    if not (isinstance(h_exp, int) and 0 <= h_exp <= m_bits):
        raise ValueError("h_exp must be an integer with 0 <= h_exp <= m_bits")
    for i in range(n):
        if r_int[i][i] <= 0:
            raise ValueError("r_matrix must have strictly positive diagonal entries")
    # Residual carried at scale 2**(m_bits - h_exp) so every update is integral.
    residual = [int(v) << (m_bits - h_exp) for v in np.asarray(rhs).tolist()]
    delta_units = [0] * n
    q = 1
    updates = 0
    exhausted = False

    while updates < n_updates:
        lead = 0
        lead_mag = abs(residual[0])
        for j in range(1, n):
            if abs(residual[j]) > lead_mag:
                lead = j
                lead_mag = abs(residual[j])
        while (lead_mag << 1) <= (r_int[lead][lead] << (m_bits - q)):
            q += 1
            if q > m_bits:
                exhausted = True
                break
        if exhausted:
            break
        sign = 1 if residual[lead] >= 0 else -1
        delta_units[lead] += sign << (m_bits - q)
        shift = m_bits - q
        for j in range(n):
            residual[j] -= sign * (r_int[j][lead] << shift)
        updates += 1
    return delta_units, residual, updates, exhausted
