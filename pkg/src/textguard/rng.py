"""Deterministic seed derivation.

All randomness in the toolkit flows from one root seed through this
derivation, so pipelines replay byte-identically on any platform.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(root: int, *parts: object) -> int:
    """Stable 64-bit child seed for (root, part, part, ...).

    Uses SHA-256 over a canonical byte encoding; independent of
    PYTHONHASHSEED and identical across platforms.
    """
    h = hashlib.sha256()
    h.update(str(int(root)).encode("utf-8"))
    for part in parts:
        h.update(b"\x1f")
        h.update(str(part).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "big")


def rng_for(root: int, *parts: object) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root, *parts))
