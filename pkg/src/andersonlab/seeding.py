"""Reproducible stream derivation for disorder and path ensembles.

Every stochastic routine in the package takes an integer seed and builds its
generator through :func:`stream`.  Realization-level parallelism derives one
independent stream per realization index from a single master seed, so results
do not depend on scheduling order.
"""

import numpy as np

__all__ = ["stream", "substream", "derive_seed"]


def stream(seed):
    """Philox-backed generator for a 64-bit seed.

    Philox is counter-based: distinct keys give provably disjoint streams.
    """
    return np.random.Generator(np.random.Philox(key=np.uint64(seed) & np.uint64(2**64 - 1)))


def substream(master_seed, index):
    """Generator for realization `index` under `master_seed`.

    The stream is keyed by the pair (master_seed, index) through a
    SeedSequence spawn key, so streams for distinct indices are independent
    and invariant under reordering of the realization schedule.
    """
    ss = np.random.SeedSequence(entropy=int(master_seed) & (2**64 - 1), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(master_seed, index):
    """64-bit integer seed for realization `index`; stream(derive_seed(m, i))
    equals an independent Philox stream keyed by the (master, index) pair."""
    ss = np.random.SeedSequence(entropy=int(master_seed) & (2**64 - 1), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
