"""
Seeded random streams.

All randomness flows through ``numpy.random.Generator`` objects built from
``SeedSequence`` keys, so a stream is fully determined by the integers used
to derive it and independent streams never overlap.
"""

import numpy as np

#: Random stream type accepted by every stochastic operation.
RandomStream = np.random.Generator

# Tags separating the stream families derived from one master seed.
GP_STREAM = 1
EVALUATION_STREAM = 2
PROTOCOL_STREAM = 3


def derive_seed(*keys: int) -> int:
    """Hash non-negative integer keys into a 63-bit seed."""
    sequence = np.random.SeedSequence([int(key) for key in keys])
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def stream(*keys: int) -> RandomStream:
    """Return a fresh generator determined by ``keys``."""
    return np.random.default_rng(np.random.SeedSequence([int(key) for key in keys]))
