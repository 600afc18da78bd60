"""Named seed derivation.

Every random stream in the package is obtained from a master seed, a role
string and an integer index, so that a run is reproducible from its
configuration alone.
"""
import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def role_key(role):
    """Stable 64-bit integer for a role string."""
    digest = hashlib.blake2b(role.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_seed(master_seed, role, *index):
    """SeedSequence keyed by ``(master_seed, role, *index)``."""
    entropy = [int(master_seed) & _MASK64, role_key(role)]
    entropy.extend(int(i) & _MASK64 for i in index)
    return np.random.SeedSequence(entropy)


def generator(master_seed, role, *index):
    """Counter-based (Philox) generator for the keyed stream."""
    return np.random.Generator(np.random.Philox(derive_seed(master_seed, role, *index)))
