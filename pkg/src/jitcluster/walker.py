"""Monte Carlo of the 1D buffer random walk.

Each step a mini-cluster is attached with probability ``p`` (the buffer
gains ``m - c1``) or the attempt fails (the buffer loses ``c2``); then one
qubit is measured.  With ``m`` from :func:`~jitcluster.analytic.minicluster_size`
the drift is exactly zero.  This serves as the numerical oracle for the
analytic buffer model.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from functools import partial
from typing import Sequence

import numpy as np

from jitcluster.analytic import buffer_factor, buffer_fluctuation, minicluster_size
from jitcluster.gates import EntanglingProcedure
from jitcluster.seeding import make_rng, ordered_map, split_blocks

TRIAL_BLOCK = 1024
_CHUNK_ELEMENTS = 1 << 20


@dataclass(frozen=True)
class WalkConfig:
    """Buffer-walk scenario.

    The walk starts at ``beta_multiplier * start_buffer``; ``start_buffer=None``
    means the analytic mean buffer ``beta(alpha) * dN`` of the 1D model.
    """

    p: float
    proc: EntanglingProcedure
    horizon: int
    trials: int = 1
    start_buffer: float | None = None
    beta_multiplier: float = 1.0
    integer_mode: bool = False
    seed: int = 0
    alpha: float = 10.0

    def __post_init__(self) -> None:
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"p must lie in (0, 1], got {self.p}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be at least 1, got {self.horizon}")
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        if self.start_buffer is not None and self.start_buffer < 0:
            raise ValueError(f"start_buffer must be nonnegative, got {self.start_buffer}")
        if self.beta_multiplier < 0:
            raise ValueError(f"beta_multiplier must be nonnegative, got {self.beta_multiplier}")

    @property
    def base_buffer(self) -> float:
        if self.start_buffer is not None:
            return float(self.start_buffer)
        return buffer_factor(self.alpha) * buffer_fluctuation(self.p, self.proc)

    @property
    def initial_buffer(self) -> float:
        return self.beta_multiplier * self.base_buffer

    @property
    def minicluster(self) -> float:
        m = minicluster_size(self.p, self.proc)
        return float(_ceil(m)) if self.integer_mode else m

    def step_values(self) -> tuple[float, float]:
        """Increments ``(on success, on failure)``, measured qubit included."""
        return self.minicluster - self.proc.c1 - 1.0, -(self.proc.c2 + 1.0)


@dataclass(frozen=True)
class WalkStats:
    empirical_step_mean: float
    empirical_step_variance: float
    min_buffer: float
    underflow_trials: int
    trials: int
    horizon: int

    def to_dict(self) -> dict:
        return asdict(self)


def _ceil(x: float) -> int:
    # m is often an integer up to rounding (2/p at p = 1/k); don't bump it.
    return math.ceil(x - 1e-9)


def exact_step_moments(p: float, proc: EntanglingProcedure) -> tuple[float, float]:
    """Exact mean and variance of one step, by enumerating both outcomes."""
    m = minicluster_size(p, proc)
    outcomes = ((p, m - proc.c1 - 1.0), (1.0 - p, -(proc.c2 + 1.0)))
    mean = sum(w * x for w, x in outcomes)
    variance = sum(w * (x - mean) ** 2 for w, x in outcomes)
    if abs(mean) > 1e-12 * max(1.0, m):
        raise ArithmeticError(f"nonzero drift {mean} for {proc.name} at p={p}")
    return mean, variance


def _run_block(config: WalkConfig, block: tuple[int, int]) -> tuple[int, float, int]:
    """Simulate one trial block; returns (successes, min buffer, underflowed trials)."""
    index, n = block
    rng = make_rng(config.seed, "walk", index)
    up, down = config.step_values()
    buffer = np.full(n, config.initial_buffer)
    lowest = buffer.copy()
    chunk = max(1, _CHUNK_ELEMENTS // n)
    successes = 0
    done = 0
    while done < config.horizon:
        length = min(chunk, config.horizon - done)
        success = rng.random((n, length)) < config.p
        successes += int(success.sum())
        path = buffer[:, None] + np.cumsum(np.where(success, up, down), axis=1)
        np.minimum(lowest, path.min(axis=1), out=lowest)
        buffer = path[:, -1]
        done += length
    # Underflow: fewer than one qubit available at some visited state.
    return successes, float(lowest.min()), int((lowest < 1.0).sum())


def simulate_buffer(config: WalkConfig, workers: int = 1) -> WalkStats:
    """Run ``config.trials`` independent walks of ``config.horizon`` steps.

    Trials are grouped into fixed blocks of :data:`TRIAL_BLOCK`, each with its
    own derived seed, so results do not depend on ``workers``.  The buffer may
    go negative; an underflow is recorded and the walk continues.
    """
    blocks = split_blocks(config.trials, TRIAL_BLOCK)
    results = ordered_map(partial(_run_block, config), blocks, workers)
    successes = sum(r[0] for r in results)
    total = config.trials * config.horizon
    up, down = config.step_values()
    frac = successes / total
    mean = frac * up + (1.0 - frac) * down
    variance = frac * (1.0 - frac) * (up - down) ** 2
    return WalkStats(
        empirical_step_mean=mean,
        empirical_step_variance=variance,
        min_buffer=min(r[1] for r in results),
        underflow_trials=sum(r[2] for r in results),
        trials=config.trials,
        horizon=config.horizon,
    )


def underflow_stats(
    config: WalkConfig, beta_grid: Sequence[float], workers: int = 1
) -> list[tuple[float, float]]:
    """Underflow fraction for each start-buffer multiplier in ``beta_grid``.

    Every multiplier reuses the same seed, so the fractions are exactly
    nonincreasing along an increasing grid.
    """
    grid = list(beta_grid)
    if not grid:
        raise ValueError("beta_grid must be nonempty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("beta_grid must be nondecreasing")
    rows = []
    for b in grid:
        stats = simulate_buffer(replace(config, beta_multiplier=b), workers)
        rows.append((float(b), stats.underflow_trials / stats.trials))
    return rows


def default_horizon(p: float, alpha: float) -> int:
    return _ceil(1.0 / p) * _ceil(alpha)


def variance_report(p: float, proc: EntanglingProcedure) -> dict[str, float]:
    """Exact per-step variance next to the closed-form (dN)^2; they differ in general."""
    _, exact = exact_step_moments(p, proc)
    return {"exact_step_variance": exact, "closed_form_variance": buffer_fluctuation(p, proc) ** 2}
