"""Closed-form buffer statistics, T2 thresholds and bit-flip accumulation.

Everything is measured in units of the step time ``dt``: one entangling
attempt or one measurement, whichever takes longer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from jitcluster.errors import ConstructionUnsupportedError
from jitcluster.gates import EntanglingProcedure, require_2d_construction

DIMENSIONS = (1, 2, 3)


class Variant(str, Enum):
    GENERAL = "general"
    PRINTED = "printed"


class Quantity(str, Enum):
    T2 = "t2"
    BITFLIP_NOT_ERROR = "bitflip_not_error"


def _check_p(p: float) -> None:
    if not (0.0 < p <= 1.0) or math.isnan(p):
        raise ValueError(f"success probability p must lie in (0, 1], got {p}")


@dataclass(frozen=True)
class ArchitectureParams:
    """One scenario.

    ``tau=None`` means the mini-cluster production time follows the
    conservative default ``tau = 1/p``; a number fixes it.
    """

    p: float
    alpha: float = 10.0
    tau: float | None = None
    dimension: int = 1
    logical_qubits: int = 1

    def __post_init__(self) -> None:
        _check_p(self.p)
        if not self.alpha > 1.0:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")
        if self.tau is not None and not self.tau >= 0.0:
            raise ValueError(f"tau must be nonnegative, got {self.tau}")
        if self.dimension not in DIMENSIONS:
            raise ValueError(f"dimension must be one of {DIMENSIONS}, got {self.dimension}")
        if self.logical_qubits < 1:
            raise ValueError(f"logical_qubits must be positive, got {self.logical_qubits}")

    @property
    def tau_value(self) -> float:
        return 1.0 / self.p if self.tau is None else float(self.tau)

    def with_p(self, p: float) -> ArchitectureParams:
        return ArchitectureParams(p, self.alpha, self.tau, self.dimension, self.logical_qubits)


@dataclass(frozen=True)
class ThresholdBreakdown:
    tau: float
    mean_buffer: float
    minicluster: float
    qubit_age: float
    t2: float
    variant: Variant


def growth_rate(p: float, proc: EntanglingProcedure, m: float) -> float:
    """Mean buffer growth per step when mini-clusters of size ``m`` are added."""
    _check_p(p)
    if m < 0:
        raise ValueError(f"mini-cluster size must be nonnegative, got {m}")
    return p * (m - proc.c1) - (1.0 - p) * proc.c2 - 1.0


def minicluster_size(p: float, proc: EntanglingProcedure) -> float:
    """Mini-cluster size that makes the mean growth rate exactly zero."""
    _check_p(p)
    return (1.0 + p * proc.c1 + (1.0 - p) * proc.c2) / p


def buffer_fluctuation(p: float, proc: EntanglingProcedure) -> float:
    """Random-walk fluctuation of the buffer length, ``sqrt((1+c2)^2/p - c2(2-c2))``."""
    _check_p(p)
    c2 = proc.c2
    radicand = (1.0 + c2) ** 2 / p - c2 * (2.0 - c2)
    if radicand < 0:
        raise ValueError(f"negative fluctuation radicand {radicand} for p={p}, c2={c2}")
    return math.sqrt(radicand)


def buffer_factor(alpha: float) -> float:
    """Gaussian tail margin ``sqrt(2 ln alpha)`` matching an error rate of 1/alpha."""
    if not alpha >= 1.0:
        raise ValueError(f"alpha must be at least 1, got {alpha}")
    return math.sqrt(2.0 * math.log(alpha))


def dimension_penalty(params: ArchitectureParams, proc: EntanglingProcedure) -> float:
    """Multiplier on the 1D buffer: ``2(d-1)/p`` for in-cluster gates, 1 otherwise."""
    if params.dimension not in DIMENSIONS:
        raise ValueError(f"dimension must be one of {DIMENSIONS}, got {params.dimension}")
    if params.dimension == 1 or proc.broker_client:
        return 1.0
    return 2.0 * (params.dimension - 1) / params.p


def mean_buffer(params: ArchitectureParams, proc: EntanglingProcedure) -> float:
    return dimension_penalty(params, proc) * buffer_factor(params.alpha) * buffer_fluctuation(params.p, proc)


def _printed_terms(params: ArchitectureParams, proc: EntanglingProcedure) -> tuple[float, float]:
    # Only the c1 = c2 = 1 lines exist in closed form, for d = 1 and d = 2.
    if proc.broker_client or proc.c1 != 1 or proc.c2 != 1:
        raise ValueError(f"printed specialization exists only for c1 = c2 = 1, not {proc.name}")
    p, log_alpha = params.p, math.log(params.alpha)
    if params.dimension == 1:
        buffer = math.sqrt((8.0 - 2.0 * p) * log_alpha / p)
    elif params.dimension == 2:
        buffer = 4.0 * math.sqrt((4.0 - p) * log_alpha / p**3)
    else:
        raise ValueError("printed specialization exists only for dimensions 1 and 2")
    return buffer, 2.0 / p


def t2_threshold(
    params: ArchitectureParams,
    proc: EntanglingProcedure,
    variant: Variant | str = Variant.GENERAL,
) -> ThresholdBreakdown:
    """Minimum T2 (in units of dt) for sustained just-in-time computation.

    The general variant assembles ``alpha * (tau + <N> + m)`` from its parts
    and is the canonical one.  The printed variant evaluates the simplified
    ``c1 = c2 = 1`` closed forms; for ``d = 2`` its buffer term is larger
    than the general one by a factor ``sqrt(2)`` (see
    :func:`printed_buffer_ratio`).

    Raises:
        ConstructionUnsupportedError: ``d >= 2`` with a non-broker gate whose
            ``c2 > 1``.
    """
    variant = Variant(variant)
    if params.dimension >= 2 and not proc.broker_client:
        require_2d_construction(proc)
    tau = params.tau_value
    if variant is Variant.GENERAL:
        buffer = mean_buffer(params, proc)
        m = minicluster_size(params.p, proc)
    else:
        buffer, m = _printed_terms(params, proc)
    age = tau + buffer + m
    return ThresholdBreakdown(tau, buffer, m, age, params.alpha * age, variant)


def printed_buffer_ratio(params: ArchitectureParams, proc: EntanglingProcedure) -> float:
    """Ratio of the printed closed-form buffer term to the general one (1 in 1D, sqrt 2 in 2D)."""
    printed = t2_threshold(params, proc, Variant.PRINTED)
    general = t2_threshold(params, proc, Variant.GENERAL)
    return printed.mean_buffer / general.mean_buffer


def bitflip_not_error(p: float, alpha: float) -> float:
    """Probability of no teleported bit flip over the ``2/p`` cleanup measurements.

    Each measurement flips with ``delta = (1 - exp(-t/T2))/2`` at ``t = T2/alpha``.
    """
    _check_p(p)
    if not alpha >= 1.0:
        raise ValueError(f"alpha must be at least 1, got {alpha}")
    delta = 0.5 * (1.0 - math.exp(-1.0 / alpha))
    # Compare per measurement: the 2/p exponent would amplify rounding for tiny p.
    log_stepwise = math.log1p(-delta)
    log_closed = -1.0 / (2.0 * alpha) + math.log(math.cosh(1.0 / (2.0 * alpha)))
    if not math.isclose(log_stepwise, log_closed, rel_tol=1e-12, abs_tol=1e-15):
        raise ArithmeticError(f"bit-flip forms disagree: {log_stepwise!r} vs {log_closed!r}")
    return math.exp((2.0 / p) * log_stepwise)


@dataclass(frozen=True)
class SweepRow:
    p: float
    value: float
    breakdown: ThresholdBreakdown | None = None
    error: str | None = None

    @property
    def flagged(self) -> bool:
        return self.error is not None


def p_grid(p_min: float, p_max: float, steps: int) -> np.ndarray:
    if steps < 1:
        raise ValueError(f"steps must be at least 1, got {steps}")
    if not (0.0 < p_min <= p_max <= 1.0):
        raise ValueError(f"need 0 < p_min <= p_max <= 1, got [{p_min}, {p_max}]")
    if steps == 1:
        return np.array([p_min])
    return np.linspace(p_min, p_max, steps)


def sweep_curve(
    template: ArchitectureParams,
    proc: EntanglingProcedure,
    p_min: float,
    p_max: float,
    steps: int,
    quantity: Quantity | str = Quantity.T2,
    variant: Variant | str = Variant.GENERAL,
) -> list[SweepRow]:
    """Evaluate a quantity on a uniform inclusive p-grid.

    Construction-unsupported rows come back flagged with ``value = nan``
    instead of aborting the sweep.
    """
    quantity = Quantity(quantity)
    rows = []
    evaluate: Callable[[float], SweepRow]
    if quantity is Quantity.T2:
        def evaluate(p: float) -> SweepRow:
            b = t2_threshold(template.with_p(p), proc, variant)
            return SweepRow(p, b.t2, b)
    else:
        def evaluate(p: float) -> SweepRow:
            return SweepRow(p, bitflip_not_error(p, template.alpha))

    for p in p_grid(p_min, p_max, steps):
        p = float(p)
        try:
            rows.append(evaluate(p))
        except (ConstructionUnsupportedError, ValueError) as exc:
            rows.append(SweepRow(p, math.nan, None, str(exc)))
    return rows
