"""Seed derivation for independent, reproducible random streams.

Every stochastic object in the package draws from a stream derived from a
64-bit root seed plus a structured key (replica index, purpose tag, ...).
Streams for distinct keys are statistically independent and do not depend
on worker count or evaluation order.
"""

import numpy as np

# Stable purpose tags.  New purposes get new codes; never renumber.
PURPOSES = {
    "field": 1,
    "init": 2,
    "direct": 3,
    "brownian_pos": 4,
    "brownian_neg": 5,
    "wiener": 6,
    "misc": 7,
}


def stream(root_seed: int, *key) -> np.random.Generator:
    """Return a Generator for (root_seed, key).

    Key elements may be small ints or purpose-tag strings.  The same
    (root_seed, key) always yields the same stream.
    """
    coded = tuple(PURPOSES[k] if isinstance(k, str) else int(k) for k in key)
    ss = np.random.SeedSequence(entropy=int(root_seed) & (2**64 - 1), spawn_key=coded)
    return np.random.default_rng(ss)


def derive_seed(root_seed: int, *key) -> int:
    """Collapse (root_seed, key) into a fresh 64-bit seed (for sub-objects)."""
    coded = tuple(PURPOSES[k] if isinstance(k, str) else int(k) for k in key)
    ss = np.random.SeedSequence(entropy=int(root_seed) & (2**64 - 1), spawn_key=coded)
    words = ss.generate_state(2, dtype=np.uint32)
    return int(words[0]) << 32 | int(words[1])
