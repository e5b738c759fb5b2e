import hashlib

import numpy as np

_SEED_MASK = (1 << 63) - 1


def derive_seed(master: int, label: str, *index) -> int:
    """
    Derive a reproducible child seed from a master seed.

    The child depends only on the master seed, the label and the index path, so work that is
    split across processes draws the same numbers whatever order it runs in.

    Parameters:
    master (int): Master seed of the run.
    label (str): Name of the consumer, e.g. "record" or "solver".
    index: Optional integers further qualifying the consumer.

    Returns:
    int: A non-negative 63-bit seed.
    """
    key = ":".join([str(int(master)), label, *(str(int(i)) for i in index)])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & _SEED_MASK


def derive_rng(master: int, label: str, *index) -> np.random.Generator:
    """Return a numpy Generator seeded with derive_seed(master, label, *index)."""
    return np.random.default_rng(derive_seed(master, label, *index))
