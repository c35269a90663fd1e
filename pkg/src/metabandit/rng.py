"""Deterministic named random streams.

Every source of randomness in the library is addressed by a (seed, stream)
pair.  Streams are backed by the counter-based Philox generator keyed by the
seed and a stable 64-bit hash of the stream label, so identical pairs yield
identical sequences on every platform and distinct labels give independent
streams without any coordination.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _label_hash(label: str) -> int:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def seeded_rng(seed: int, stream: str) -> np.random.Generator:
    """Return the deterministic generator for a (seed, stream) pair.

    The Philox key packs the seed into the high 64 bits and the hashed
    stream label into the low 64 bits, so seeds and labels never collide.
    """
    key = ((int(seed) & _MASK64) << 64) | _label_hash(stream)
    return np.random.Generator(np.random.Philox(key=key))


def derive_kernel_seed(rng: np.random.Generator) -> int:
    """Draw a 32-bit seed for a compiled kernel from a named stream."""
    return int(rng.integers(0, 2**32, dtype=np.uint64))
