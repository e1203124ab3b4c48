"""Seeded random streams.

Every random draw goes through a Philox (counter-based) generator keyed by
an integer seed and a named stream, so coefficient draws, Haar states and
fragment sampling never share state.
"""

import numpy as np

STREAMS = {
    "coefficients": 0,
    "haar": 1,
    "fragments": 2,
    "pointer": 3,
}


def stream(seed: int, name: str, *extra: int) -> np.random.Generator:
    if name not in STREAMS:
        raise KeyError(f"unknown random stream {name!r}")
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(STREAMS[name], *map(int, extra)))
    return np.random.Generator(np.random.Philox(seq))
