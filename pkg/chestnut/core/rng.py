"""Labeled random substreams derived from one root seed.

Every consumer asks for its own stream by purpose label (and index where it
has many, e.g. one stream per server), so results do not depend on the order
in which independent parts of the pipeline draw numbers.
"""
import hashlib

import numpy as np


def stable_u64(text: str) -> int:
    """Stable 64-bit hash, identical across processes and platforms."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, byteorder="little", signed=False)


def substream(seed: int, *labels: object) -> np.random.Generator:
    """Independent generator for (seed, labels...)."""
    label = "/".join(str(part) for part in labels)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, stable_u64(label)])))
