"""Reproducible random streams.

Every path gets its own Philox stream keyed on ``(master_seed, arm, index)``
through :class:`numpy.random.SeedSequence` spawn keys, so a path's draws
never depend on how the batch is split across workers.
"""

import numpy as np

# Stream families. Distinct arms never share a spawn key.
ARM_STAT = 0
ARM_PARTNER = 1   # the independent second motion for cross statistics
ARM_LAW = 2       # reference-law radial draws (alpha or beta)
ARM_LAW_PARTNER = 3
ARM_NORMAL = 4    # the independent standard normals of the limit law
ARM_HORIZON = 5   # exponential horizons
ARM_BOOT = 6

_MASK64 = (1 << 64) - 1


def check_seed(seed):
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def path_seed(master_seed, index, arm=ARM_STAT):
    """64-bit seed of path ``index`` in stream family ``arm``."""
    ss = np.random.SeedSequence(check_seed(master_seed), spawn_key=(int(arm), int(index)))
    return int(ss.generate_state(1, np.uint64)[0])


def generator(seed):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(check_seed(seed))))


def raw_words(seed, n_bits):
    """Little-endian uint64 words holding at least ``n_bits`` random bits."""
    g = generator(seed)
    return g.bit_generator.random_raw((int(n_bits) + 63) // 64).astype("<u8", copy=False)
