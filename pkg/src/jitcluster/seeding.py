"""Deterministic seed derivation and order-preserving parallel maps.

Every random stream is a numpy ``Generator`` over ``PCG64``, seeded with
``derive_seed(master_seed, label, index)``.  The mixer is BLAKE2b with an
8-byte digest over::

    b"jitcluster-seed-v1" | uint64_le(master_seed) | uint32_le(len(label)) | label_utf8 | uint64_le(index)

read back as an unsigned little-endian 64-bit integer.  It depends on
nothing platform-specific, so seeds are stable across machines and releases.
Work is split into fixed-size units (trial blocks, sweep rows) whose seeds
depend only on their own index, so the number of workers cannot change the
result.
"""

from __future__ import annotations

import hashlib
import struct
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

_DOMAIN = b"jitcluster-seed-v1"
_MASK64 = (1 << 64) - 1

T = TypeVar("T")
R = TypeVar("R")


def derive_seed(master_seed: int, stream_label: str, trial_index: int) -> int:
    if not 0 <= trial_index <= _MASK64:
        raise ValueError(f"trial_index out of 64-bit range: {trial_index}")
    label = stream_label.encode("utf-8")
    payload = (
        _DOMAIN
        + struct.pack("<Q", master_seed & _MASK64)
        + struct.pack("<I", len(label))
        + label
        + struct.pack("<Q", trial_index)
    )
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def make_rng(master_seed: int, stream_label: str, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(master_seed, stream_label, index)))


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    """``[fn(x) for x in items]``, optionally across processes; result order is input order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def split_blocks(total: int, block_size: int) -> Sequence[tuple[int, int]]:
    """``(block_index, count)`` pairs covering ``total`` items in fixed-size blocks."""
    full, rest = divmod(total, block_size)
    blocks = [(i, block_size) for i in range(full)]
    if rest:
        blocks.append((full, rest))
    return blocks
