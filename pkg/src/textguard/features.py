"""Hashed n-gram features shared by the classifier and the anomaly detector.

Character 3-5 grams plus word unigrams and bigrams, hashed into a fixed
dimension with FNV-1a-64. A feature key is its kind prefix (ASCII bytes)
followed by the content's Unicode codepoints; the hash folds those units
in order. The scheme is keyed by feature kind, fixed forever, and
platform-independent; golden tests depend on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .corpus import tokenize

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

_NP_PRIME = np.uint64(_FNV_PRIME)

DEFAULT_HASH_DIM = 1 << 18


def fnv1a64(units) -> int:
    """Reference scalar FNV-1a-64 over an iterable of integer units."""
    h = _FNV_OFFSET
    for unit in units:
        h ^= unit
        h = (h * _FNV_PRIME) & _MASK64
    return h


@lru_cache(maxsize=64)
def _prefix_hash(prefix: str) -> int:
    return fnv1a64(prefix.encode("ascii"))


def _codepoints(text: str) -> np.ndarray:
    return np.frombuffer(text.encode("utf-32-le"), dtype="<u4").astype(np.uint64)


def _fold_scalar(h: int, content: str) -> int:
    for ch in content:
        h ^= ord(ch)
        h = (h * _FNV_PRIME) & _MASK64
    return h


def hash_key(prefix: str, content: str) -> int:
    """Hash one feature key; the vectorized path must agree with this."""
    return _fold_scalar(_prefix_hash(prefix), content)


def _ngram_hashes(cps: np.ndarray, n: int, prefix_h: int) -> np.ndarray:
    """FNV-1a of every length-n window, folded after the kind prefix."""
    count = len(cps) - n + 1
    if count <= 0:
        return np.empty(0, dtype=np.uint64)
    h = np.full(count, prefix_h, dtype=np.uint64)
    with np.errstate(over="ignore"):
        for j in range(n):
            h ^= cps[j:j + count]
            h *= _NP_PRIME
    return h


@dataclass(frozen=True)
class FeatureSpec:
    hash_dim: int = DEFAULT_HASH_DIM
    char_ngram_min: int = 3
    char_ngram_max: int = 5

    def to_dict(self) -> dict:
        return {
            "hash_dim": self.hash_dim,
            "char_ngram_min": self.char_ngram_min,
            "char_ngram_max": self.char_ngram_max,
            "hash": "fnv1a64",
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSpec":
        if d.get("hash", "fnv1a64") != "fnv1a64":
            raise ValueError(f"unsupported feature hash {d.get('hash')!r}")
        return cls(
            hash_dim=d["hash_dim"],
            char_ngram_min=d["char_ngram_min"],
            char_ngram_max=d["char_ngram_max"],
        )


def feature_hashes(spec: FeatureSpec, text: str) -> np.ndarray:
    """Unreduced 64-bit hashes of every feature occurrence in `text`."""
    norm = text.lower()
    cps = _codepoints(norm)
    parts = [
        _ngram_hashes(cps, n, _prefix_hash(f"c{n}|"))
        for n in range(spec.char_ngram_min, spec.char_ngram_max + 1)
    ]
    words = [t.lower() for t in tokenize(text).tokens if t[0].isalnum()]
    w1 = _prefix_hash("w1|")
    w2 = _prefix_hash("w2|")
    word_hashes = [_fold_scalar(w1, w) for w in words]
    word_hashes += [_fold_scalar(w2, f"{a} {b}") for a, b in zip(words, words[1:])]
    if word_hashes:
        parts.append(np.array(word_hashes, dtype=np.uint64))
    if not parts:
        return np.empty(0, dtype=np.uint64)
    return np.concatenate(parts)


@lru_cache(maxsize=20000)
def _extract_cached(spec: FeatureSpec, text: str) -> tuple[np.ndarray, np.ndarray]:
    hashes = feature_hashes(spec, text)
    if hashes.size == 0:
        empty_i = np.empty(0, dtype=np.int64)
        empty_v = np.empty(0, dtype=np.float64)
        return empty_i, empty_v
    reduced = (hashes % np.uint64(spec.hash_dim)).astype(np.int64)
    indices, counts = np.unique(reduced, return_counts=True)
    values = counts.astype(np.float64)
    values /= np.linalg.norm(values)
    indices.setflags(write=False)
    values.setflags(write=False)
    return indices, values


def extract(spec: FeatureSpec, text: str) -> tuple[np.ndarray, np.ndarray]:
    """Sparse L2-normalized feature vector as (indices, values).

    Results are cached and returned read-only; callers must not mutate.
    """
    return _extract_cached(spec, text)
