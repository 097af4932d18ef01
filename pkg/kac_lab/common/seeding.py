"""Splittable seed protocol.

Every random stream is derived from (master_seed, index, stream) through
numpy's SeedSequence spawn keys, so a block of paths draws the same numbers
whichever worker computes it.
"""

import numpy as np

INCREMENT_STREAM = 0
CROSSING_STREAM = 1
AUXILIARY_STREAM = 2
PATH_STREAM = 3


def block_seed_sequence(master_seed: int, block_index: int, stream: int) -> np.random.SeedSequence:
    if master_seed < 0:
        raise ValueError("master_seed must be a non-negative integer")
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(block_index), int(stream)))


def block_generator(master_seed: int, block_index: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(block_seed_sequence(master_seed, block_index, stream)))


def path_seed(master_seed: int, index: int) -> int:
    """Per-path integer seed for the stored-path API."""
    state = block_seed_sequence(master_seed, index, PATH_STREAM).generate_state(1, dtype=np.uint64)
    return int(state[0])


def partition_blocks(n_paths: int, block_size: int):
    """Split n_paths into consecutive (block_index, size) pieces."""
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    blocks = []
    start = 0
    index = 0
    while start < n_paths:
        size = min(block_size, n_paths - start)
        blocks.append((index, size))
        start += size
        index += 1
    return blocks
