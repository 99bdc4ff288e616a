"""Independent exact oracles for the Monte Carlo code paths.

These enumerate probability distributions with exact fractions and share no
code with the simulators they check.
"""

from __future__ import annotations

import math
from collections import defaultdict
from fractions import Fraction
from typing import Iterator


def _perfect_matchings(items: tuple[int, ...]) -> Iterator[list[tuple[int, int]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for k in range(len(rest)):
        others = rest[:k] + rest[k + 1 :]
        for m in _perfect_matchings(others):
            yield [(first, rest[k])] + m


def _matchings_with_idle(chains: tuple[int, ...]) -> list[tuple[Fraction, list[tuple[int, int]], list[int]]]:
    """Every (probability, pairs, idle) of a uniformly random matching."""
    n = len(chains)
    out = []
    idles = range(n) if n % 2 else [None]
    for i in idles:
        rest = tuple(c for k, c in enumerate(chains) if k != i)
        ms = list(_perfect_matchings(rest))
        weight = Fraction(1, len(idles) * len(ms))
        for m in ms:
            out.append((weight, m, [] if i is None else [chains[i]]))
    return out


def _pair_outcomes(a: int, b: int, p: Fraction, c1: int, c2: int) -> list[tuple[Fraction, list[int]]]:
    outcomes = [(p, [max(a + b - c1, 2)])]
    half, odd = divmod(c2, 2)
    splits = [(half + odd, half), (half, half + odd)] if odd else [(half, half)]
    for la, lb in splits:
        kept = [x for x in (a - la, b - lb) if x >= 1]
        outcomes.append(((1 - p) / len(splits), kept))
    return outcomes


def round_distribution(state: tuple[int, ...], p: Fraction, c1: int, c2: int) -> dict[tuple[int, ...], Fraction]:
    dist: dict[tuple[int, ...], Fraction] = defaultdict(Fraction)
    for weight, pairs, idle in _matchings_with_idle(state):
        partial = {tuple(idle): weight}
        for a, b in pairs:
            nxt: dict[tuple[int, ...], Fraction] = defaultdict(Fraction)
            for chains, w in partial.items():
                for q, added in _pair_outcomes(a, b, p, c1, c2):
                    nxt[chains + tuple(added)] += w * q
            partial = nxt
        for chains, w in partial.items():
            dist[tuple(sorted(chains))] += w
    return dict(dist)


def exact_yield(q: int, p: Fraction, c1: int, c2: int, tau: int, target: int) -> Fraction:
    """Exact expected number of chains of length >= target after tau rounds."""
    dist = {(1,) * q: Fraction(1)}
    for _ in range(tau):
        nxt: dict[tuple[int, ...], Fraction] = defaultdict(Fraction)
        for state, w in dist.items():
            for s2, w2 in round_distribution(state, p, c1, c2).items():
                nxt[s2] += w * w2
        dist = nxt
    return sum((w * sum(1 for c in s if c >= target) for s, w in dist.items()), Fraction(0))


def exact_required_reservoir(p: Fraction, c1: int, c2: int, tau: int, q_max: int = 8) -> int | None:
    target = math.ceil((1 + p * c1 + (1 - p) * c2) / p)
    for q in range(1, q_max + 1):
        if exact_yield(q, p, c1, c2, tau, target) >= 1:
            return q
    return None
