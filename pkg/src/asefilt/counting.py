"""Lightweight floating-point operation counters.

Filter steps and the coordinate-descent solver accept an optional counter;
when it is absent (the default) the instrumented code paths cost nothing
beyond a ``None`` check.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class OpCounter:
    """Running totals of floating-point work actually executed."""

    adds: int = 0
    mults: int = 0
    comparisons: int = 0

    def merge(self, other: "OpCounter") -> None:
        self.adds += other.adds
        self.mults += other.mults
        self.comparisons += other.comparisons


@dataclass(frozen=True)
class OpsPerIteration:
    """Per-iteration averages derived from an :class:`OpCounter`."""

    adds: float
    mults: float
    comparisons: float


def per_iteration(counter: OpCounter, iterations: int) -> OpsPerIteration:
    if iterations <= 0:
        raise ValueError("iterations must be positive")
    return OpsPerIteration(
        adds=counter.adds / iterations,
        mults=counter.mults / iterations,
        comparisons=counter.comparisons / iterations,
    )
