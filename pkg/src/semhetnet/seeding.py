"""Named RNG substreams derived from one master seed.

Every random draw in a scenario comes from a named substream so that
sweeping one quantity (say, the number of users) leaves the draws of the
others (say, base-station placement) untouched.
"""

import numpy as np

_STREAMS = {
    "bs-placement": 0,
    "mu-placement": 1,
    "bs-knowledge": 2,
    "mu-knowledge": 3,
    "eta": 4,
    "chance": 5,
}


def substream(master_seed, name):
    """Return a Generator for the named substream of ``master_seed``."""
    key = _STREAMS[name]
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(key,))
    return np.random.default_rng(ss)
