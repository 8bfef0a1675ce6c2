"""Deterministic seed expansion: one root seed, fixed string labels per sub-task."""
from __future__ import annotations

import zlib

import numpy as np


def derive_seed(root: int, *labels) -> np.random.SeedSequence:
    words = [int(root) & 0xFFFFFFFF]
    for label in labels:
        words.append(zlib.crc32(str(label).encode("utf-8")))
    return np.random.SeedSequence(words)


def derive_rng(root: int, *labels) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root, *labels))


def derive_int(root: int, *labels) -> int:
    return int(derive_seed(root, *labels).generate_state(1)[0])
