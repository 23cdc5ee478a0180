"""Counter-based seed derivation.

Replicate, fold and chunk c of a run seeded with s draws from
SeedSequence([s, c]); results therefore do not depend on how work is spread
over workers.
"""

from __future__ import annotations

import numpy as np


def derived_rng(master_seed: int, counter: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(counter)]))


def derive_seed(master_seed: int, counter: int) -> int:
    """A 63-bit integer seed for consumers that only accept ints (configs, manifests)."""
    state = np.random.SeedSequence([int(master_seed), int(counter)]).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))
