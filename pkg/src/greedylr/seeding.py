"""Deterministic per-component seed derivation.

Every random stream in the package is seeded by hashing the root seed with a
tuple of tags naming the component (and instance index), so any single cell of
a batch run can be reproduced on its own.
"""
import hashlib

import numpy as np


def derive_seed(root, *tags):
    """Return a 63-bit integer seed for ``(root, *tags)``."""
    key = ":".join([str(int(root))] + [str(t) for t in tags])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def rng_for(root, *tags):
    return np.random.default_rng(derive_seed(root, *tags))
