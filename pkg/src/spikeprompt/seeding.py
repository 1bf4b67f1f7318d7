"""Named RNG streams so every stochastic choice derives from one run seed."""

import numpy as np

# Stream ids namespace the per-purpose generators: consuming draws for one
# purpose never shifts another purpose's sequence.
STREAM_SPLIT = 1
STREAM_PROMPT = 2
STREAM_HEAD = 3
STREAM_ENCODER = 4
STREAM_NEGATIVE = 5
STREAM_ATTACK = 6
STREAM_PROJECTION = 7


def stream_rng(stream: int, *keys: int) -> np.random.Generator:
    """Generator for (stream, *keys); identical arguments yield identical draws."""
    return np.random.default_rng(np.random.SeedSequence([int(stream), *(int(k) for k in keys)]))


def derive_seed(stream: int, *keys: int) -> int:
    """Stable non-negative integer seed derived from (stream, *keys)."""
    return int(np.random.SeedSequence([int(stream), *(int(k) for k in keys)]).generate_state(1)[0])
