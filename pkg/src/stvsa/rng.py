"""Per-stage random streams.

Every stage draws from numpy's counter-based Philox bit generator keyed by
``master_seed XOR blake2b(stage_tag)``, so stages are reproducible on their
own and adding draws in one stage never shifts another.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def tag_hash(tag: str) -> int:
    return int.from_bytes(hashlib.blake2b(tag.encode(), digest_size=8).digest(), "little")


def stage_seed(master_seed: int, tag: str) -> int:
    return (int(master_seed) & MASK64) ^ tag_hash(tag)


def stage_rng(master_seed: int, tag: str) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=stage_seed(master_seed, tag)))
