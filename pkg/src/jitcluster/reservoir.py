"""Off-line mini-cluster production from a finite qubit reservoir.

A pool of linear chains (length 1 is a bare qubit) evolves in rounds.  Each
round the chains are paired by a uniformly random perfect matching (the
RANDOM strategy, one chain idle when the count is odd) and every pair
attempts a join:

* success: one chain of length ``max(a + b - c1, 2)``;
* failure: ``c2`` qubits are removed, ``c2 // 2`` from each chain and the
  odd one from a partner picked by a fair coin; chains shorter than 1 vanish.

Many trials run at once as a flat array of chain lengths tagged by trial id.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import partial
from typing import Iterable, Sequence

import numpy as np

from jitcluster.analytic import minicluster_size
from jitcluster.errors import SearchCapError
from jitcluster.gates import EntanglingProcedure
from jitcluster.seeding import derive_seed, make_rng, ordered_map, split_blocks

DEFAULT_Q_CAP = 10**6
# Doubling-phase screen: a Q with no mini-cluster in this many trials is skipped.
PILOT_TRIALS = 32
# Cap on chain-array elements per batch; trial blocks are sized to fit.
_BATCH_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class ClusterPool:
    chains: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(c < 1 for c in self.chains):
            raise ValueError(f"chain lengths must be positive, got {self.chains}")

    @classmethod
    def bare(cls, q: int) -> ClusterPool:
        return cls((1,) * q)

    @property
    def qubits(self) -> int:
        return sum(self.chains)

    def counts(self) -> Counter:
        return Counter(self.chains)


@dataclass(frozen=True)
class GammaFit:
    gamma: float
    intercept: float
    r_squared: float
    points: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class ReservoirEstimate:
    """Result of :func:`required_reservoir`: the smallest Q and its yield statistics."""

    q: int
    p: float
    tau: int
    yield_estimate: float
    yield_lower95: float
    trials: int


def target_length(p: float, proc: EntanglingProcedure) -> int:
    """Integer mini-cluster length, ``ceil(m)`` with rounding noise ignored."""
    return math.ceil(minicluster_size(p, proc) - 1e-9)


def longest_reachable(tau: int, proc: EntanglingProcedure) -> int:
    """Longest chain any pool can hold after ``tau`` rounds (every join succeeding)."""
    length = 1
    for _ in range(tau):
        length = max(2 * length - proc.c1, 2)
    return length


def _failure_split(c2: int, a_takes_odd: bool) -> tuple[int, int]:
    half, odd = divmod(c2, 2)
    return (half + odd, half) if a_takes_odd else (half, half + odd)


def attempt_join(
    a: int, b: int, success: bool, proc: EntanglingProcedure, rng: np.random.Generator
) -> list[int]:
    if a < 1 or b < 1:
        raise ValueError(f"chain lengths must be positive, got {a}, {b}")
    if success:
        return [max(a + b - proc.c1, 2)]
    loss_a, loss_b = _failure_split(proc.c2, bool(rng.random() < 0.5))
    return [n for n in (a - loss_a, b - loss_b) if n >= 1]


def run_round(
    pool: ClusterPool, p: float, proc: EntanglingProcedure, rng: np.random.Generator
) -> ClusterPool:
    """One round of simultaneous joins over a uniformly random matching."""
    order = rng.permutation(len(pool.chains))
    chains = [pool.chains[i] for i in order]
    out = [chains[-1]] if len(chains) % 2 else []
    for i in range(0, len(chains) - 1, 2):
        out.extend(attempt_join(chains[i], chains[i + 1], bool(rng.random() < p), proc, rng))
    return ClusterPool(tuple(sorted(out)))


def _batch_round(
    trial: np.ndarray,
    length: np.ndarray,
    n_trials: int,
    p: float,
    proc: EntanglingProcedure,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`run_round` over many pools; ``trial`` tags each chain."""
    n = trial.size
    if n == 0:
        return trial, length
    # Random order within each trial: sort by trial id plus a uniform jitter.
    order = np.argsort(trial + rng.random(n), kind="stable")
    trial, length = trial[order], length[order]
    sizes = np.bincount(trial, minlength=n_trials)
    starts = np.cumsum(sizes) - sizes
    rank = np.arange(n) - starts[trial]
    first = (rank % 2 == 0) & (rank + 1 < sizes[trial])
    idle = (rank % 2 == 0) & ~first
    i = np.flatnonzero(first)
    j = i + 1
    ok = rng.random(i.size) < p
    a_odd = rng.random(i.size) < 0.5

    joined = np.maximum(length[i] + length[j] - proc.c1, 2)
    half, odd = divmod(proc.c2, 2)
    fa = length[i] - half - np.where(a_odd, odd, 0)
    fb = length[j] - half - np.where(a_odd, 0, odd)
    fail = ~ok

    new_trial = np.concatenate([trial[idle], trial[i][ok], trial[i][fail], trial[j][fail]])
    new_length = np.concatenate([length[idle], joined[ok], fa[fail], fb[fail]])
    keep = new_length >= 1
    return new_trial[keep], new_length[keep]


def _block_size(q: int) -> int:
    return max(1, _BATCH_ELEMENTS // max(q, 1))


def _yield_total(
    q: int, p: float, proc: EntanglingProcedure, tau: int, trials: int, seed: int, workers: int
) -> tuple[float, float]:
    """Mean and sample variance of the per-trial mini-cluster count."""
    if q < 2:
        return 0.0, 0.0
    blocks = split_blocks(trials, _block_size(q))
    per_block = ordered_map(partial(_yield_counts, q, p, proc, tau, seed), blocks, workers)
    counts = np.concatenate(per_block)
    var = float(counts.var(ddof=1)) if counts.size > 1 else 0.0
    return float(counts.mean()), var


def _yield_counts(
    q: int, p: float, proc: EntanglingProcedure, tau: int, seed: int, block: tuple[int, int]
) -> np.ndarray:
    index, count = block
    rng = make_rng(seed, f"reservoir/q={q}", index)
    trial = np.repeat(np.arange(count, dtype=np.int64), q)
    length = np.ones(count * q, dtype=np.int64)
    for _ in range(tau):
        trial, length = _batch_round(trial, length, count, p, proc, rng)
    hit = length >= target_length(p, proc)
    return np.bincount(trial[hit], minlength=count)


def simulate_yield(
    q: int,
    p: float,
    proc: EntanglingProcedure,
    tau: int,
    trials: int,
    seed: int = 0,
    workers: int = 1,
) -> float:
    """Mean number of chains of length >= ceil(m) after ``tau`` rounds from ``q`` bare qubits."""
    _check(q, p, tau, trials)
    return _yield_total(q, p, proc, tau, trials, seed, workers)[0]


def _check(q: int, p: float, tau: int, trials: int) -> None:
    if q < 1:
        raise ValueError(f"reservoir size must be at least 1, got {q}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if tau < 1:
        raise ValueError(f"tau must be at least 1, got {tau}")
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")


def required_reservoir(
    p: float,
    proc: EntanglingProcedure,
    tau: int,
    trials: int,
    seed: int = 0,
    cap: int = DEFAULT_Q_CAP,
    workers: int = 1,
) -> ReservoirEstimate:
    """Smallest Q whose estimated yield reaches one mini-cluster.

    Doubles Q until the Monte Carlo yield is at least 1, then bisects.  All
    evaluations for a given Q share one seed, so repeated calls agree.
    While doubling, each Q is first screened with :data:`PILOT_TRIALS`
    trials on a separate stream; if none of them produces a mini-cluster the
    full estimate is skipped.  This keeps hopeless searches cheap.

    Raises:
        SearchCapError: no Q up to ``cap`` reaches the target.
    """
    _check(1, p, tau, trials)
    if longest_reachable(tau, proc) < target_length(p, proc):
        raise SearchCapError(
            f"{proc.name}: chains of length {target_length(p, proc)} cannot form in "
            f"{tau} rounds (longest reachable is {longest_reachable(tau, proc)})"
        )
    cache: dict[int, tuple[float, float]] = {}

    def estimate(q: int) -> tuple[float, float]:
        if q not in cache:
            cache[q] = _yield_total(q, p, proc, tau, trials, seed, workers)
        return cache[q]

    pilot_seed = derive_seed(seed, "reservoir-pilot", 0)

    def reaches(q: int) -> bool:
        if trials > PILOT_TRIALS and q not in cache:
            if _yield_total(q, p, proc, tau, PILOT_TRIALS, pilot_seed, workers)[0] == 0.0:
                return False
        return estimate(q)[0] >= 1.0

    lo, hi = 1, 2
    while not reaches(hi):
        lo, hi = hi, hi * 2
        if hi > cap:
            if reaches(cap):
                hi = cap
                break
            raise SearchCapError(
                f"no reservoir up to Q={cap} yields one mini-cluster at p={p}, tau={tau}"
            )
    # lo falls short of one mini-cluster, hi reaches it.
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if estimate(mid)[0] >= 1.0:
            hi = mid
        else:
            lo = mid
    mean, var = estimate(hi)
    lower = mean - 1.96 * math.sqrt(var / trials)
    return ReservoirEstimate(hi, p, tau, mean, lower, trials)


def fit_gamma(points: Iterable[tuple[float, float]]) -> GammaFit:
    """Least-squares line through ``(tau, ln Q)``; the slope is gamma."""
    pts = [(float(t), float(q)) for t, q in points]
    if len(pts) < 2:
        raise ValueError("need at least two (tau, Q) points")
    if any(q < 1 for _, q in pts):
        raise ValueError("all Q must be at least 1")
    tau = np.array([t for t, _ in pts])
    if np.all(tau == tau[0]):
        raise ValueError("degenerate fit: all tau values are equal")
    log_q = np.log([q for _, q in pts])
    slope, intercept = np.polyfit(tau, log_q, 1)
    residual = log_q - (slope * tau + intercept)
    total = float(np.sum((log_q - log_q.mean()) ** 2))
    r2 = 1.0 if total == 0.0 else 1.0 - float(np.sum(residual**2)) / total
    r2 = min(max(r2, 0.0), 1.0)
    return GammaFit(float(slope), float(intercept), r2, tuple(pts))


@dataclass(frozen=True)
class ScalingPoint:
    tau: int
    p: float
    estimate: ReservoirEstimate | None
    error: str | None = None


def scaling_points(
    proc: EntanglingProcedure,
    taus: Sequence[int],
    trials: int,
    seed: int = 0,
    cap: int = DEFAULT_Q_CAP,
    workers: int = 1,
) -> list[ScalingPoint]:
    """Required reservoir for each tau at ``p = 1/tau``, one derived seed per tau.

    A point whose search hits the cap (or whose target is unreachable) is
    returned with ``estimate=None`` and the error message.
    """
    jobs = [(t, derive_seed(seed, f"reservoir/{proc.name}", t)) for t in taus]
    return ordered_map(partial(_scaling_job, proc, trials, cap), jobs, workers)


def _scaling_job(proc: EntanglingProcedure, trials: int, cap: int, job: tuple[int, int]) -> ScalingPoint:
    tau, seed = job
    p = 1.0 / tau
    try:
        return ScalingPoint(tau, p, required_reservoir(p, proc, tau, trials, seed, cap))
    except SearchCapError as exc:
        return ScalingPoint(tau, p, None, str(exc))
