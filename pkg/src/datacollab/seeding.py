"""Deterministic RNG derivation for experiments.

A single master seed fans out to independent per-task generators through
``numpy.random.SeedSequence`` spawn keys. A generator is identified by the
master seed plus a tuple of integer stream ids (a stream constant followed
by loop indices such as trial and party numbers). Because derivation is
purely counter-based, serial and parallel execution of the same experiment
produce bit-identical results.
"""

import numpy as np

# Stream constants. Values are part of the reproducibility contract:
# changing them changes every derived random sequence.
ANCHOR_STREAM = 1
MAP_STREAM = 2
EPSILON_STREAM = 3
SAMPLE_STREAM = 4
DATA_STREAM = 5
TEST_STREAM = 6


def spawn_rng(master_seed: int, *stream: int) -> np.random.Generator:
    """Return the generator for (master_seed, stream ids)."""
    if master_seed < 0:
        raise ValueError("master_seed must be nonnegative")
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(int(s) for s in stream))
    return np.random.default_rng(seq)
