"""Named, reproducible random substreams.

Every concern (user placement, shadowing, fading, action choice, ...) draws from
its own generator derived from ``(seed, stream, *indices)`` so that, for
example, the fading sample path does not depend on which actions were taken.
"""

import numpy as np

STREAMS = {
    "placement": 0,
    "shadowing": 1,
    "fading": 2,
    "action": 3,
    "replay": 4,
    "init": 5,
    "random_pa": 6,
    "instances": 7,
}


def substream(seed: int, name: str, *indices: int) -> np.random.Generator:
    if name not in STREAMS:
        raise KeyError(f"unknown stream {name!r}")
    key = (STREAMS[name],) + tuple(int(i) for i in indices)
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))
