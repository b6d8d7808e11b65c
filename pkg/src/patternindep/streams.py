"""Counter-based random streams partitioned into fixed-size replication blocks.

Replication ``r`` always lands in block ``r // block_size`` and each block owns
a Philox stream keyed by (master entropy, block index).  Results are therefore
identical for any number of worker threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK_SIZE = 4096


def as_seed_sequence(rng) -> np.random.SeedSequence:
    """Normalize an int / SeedSequence / Generator / None into a SeedSequence."""
    if isinstance(rng, np.random.SeedSequence):
        return rng
    if isinstance(rng, np.random.Generator):
        return np.random.SeedSequence(int(rng.integers(0, 2**63 - 1)))
    if rng is None:
        return np.random.SeedSequence()
    return np.random.SeedSequence(int(rng))


def block_generator(root: np.random.SeedSequence, block: int) -> np.random.Generator:
    child = np.random.SeedSequence(root.entropy, spawn_key=tuple(root.spawn_key) + (int(block),))
    return np.random.Generator(np.random.Philox(child))


def substream(root: np.random.SeedSequence, *key: int) -> np.random.SeedSequence:
    """Deterministic child sequence addressed by an integer key path."""
    return np.random.SeedSequence(root.entropy, spawn_key=tuple(root.spawn_key) + tuple(int(k) for k in key))


def default_workers() -> int:
    env = os.environ.get("PATTERNINDEP_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def map_blocks(fn, reps: int, rng, workers: int | None = None, block_size: int = BLOCK_SIZE):
    """Run ``fn(generator, size)`` over replication blocks and concatenate in block order."""
    if reps < 0:
        raise ValueError("reps must be non-negative")
    root = as_seed_sequence(rng)
    nblocks = (reps + block_size - 1) // block_size
    sizes = [min(block_size, reps - b * block_size) for b in range(nblocks)]

    def run(b):
        return fn(block_generator(root, b), sizes[b])

    workers = workers or default_workers()
    if workers <= 1 or nblocks <= 1:
        parts = [run(b) for b in range(nblocks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, range(nblocks)))
    if not parts:
        return np.empty(0)
    return np.concatenate(parts)
