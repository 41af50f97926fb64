"""Deterministic per-unit random streams."""
from __future__ import annotations

import hashlib

import numpy as np


def stable_hash(key: str) -> int:
    """64-bit hash of ``key`` that does not depend on PYTHONHASHSEED."""
    return int.from_bytes(hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest(), "little")


def stream(seed: int, key: str) -> np.random.Generator:
    """Independent generator for ``key`` under the pipeline ``seed``."""
    entropy = [seed & 0xFFFFFFFFFFFFFFFF, stable_hash(key)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
