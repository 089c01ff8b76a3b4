"""
Counter-based random streams keyed by (seed, purpose, ...)
"""
import numpy as np

SEED_MASK = (1 << 64) - 1

# Stream purposes
SCENE = 0
DROPOUT = 1
DROP_COUNT = 2
NOISE = 3
FLIP = 4
SCENE_INDEX = 5


def stream(seed: int, *keys: int) -> np.random.Generator:
    """
    Independent generator for one key path. Philox is counter-based, so a
    stream depends only on its keys, never on which streams were drawn before.
    """
    entropy = [int(seed) & SEED_MASK] + [int(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, index: int) -> int:
    """64-bit seed of the index-th item of a seeded batch"""
    state = np.random.SeedSequence([int(seed) & SEED_MASK, SCENE_INDEX, int(index)]).generate_state(1, dtype=np.uint64)
    return int(state[0])
