"""Keyed random streams.

Every random draw in the package comes from a Philox generator whose key is
``(seed, tag, *indices)``.  Streams for different realizations or channel
blocks never overlap and can be created in any order, which is what makes
threaded Monte Carlo reproducible.
"""

import numpy as np

TOPOLOGY = 0
CHANNEL = 1
AUX = 2


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``key`` under the scenario ``seed``."""
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))
