"""Deterministic offline backends for integration fixtures.

Every output is a pure function of the request: predict returns the
uniform distribution, mlm answers from a fixed dictionary, and translate
applies a reversible token rotation with a pivot marker appended.
"""

from __future__ import annotations

import string

_STUB_DICTIONARY = {
    "good": ["great", "fine", "nice", "solid", "decent"],
    "bad": ["poor", "awful", "weak", "sour", "bleak"],
    "film": ["movie", "picture", "feature", "reel", "show"],
    "story": ["tale", "plot", "narrative", "yarn", "arc"],
    "great": ["good", "fine", "grand", "super", "ace"],
}

_DEFAULT_SUGGESTIONS = ["great", "fine", "nice", "solid", "plain"]


def stub_predict(texts: list[str], num_classes: int) -> list[list[float]]:
    row = [1.0 / num_classes] * num_classes
    return [list(row) for _ in texts]


def _strip_token(token: str) -> str:
    return token.strip(string.punctuation).lower()


def stub_mlm(text: str, mask_indices: list[int], top_k: int) -> list[list[str]]:
    tokens = text.split()
    suggestions = []
    for index in mask_indices:
        word = _strip_token(tokens[index]) if 0 <= index < len(tokens) else ""
        ranked = _STUB_DICTIONARY.get(word, _DEFAULT_SUGGESTIONS)
        row = [ranked[i % len(ranked)] for i in range(top_k)]
        suggestions.append(row)
    return suggestions


def translate_marker(pivot: str) -> str:
    return f"[bt-{pivot}]"


def stub_translate(text: str, pivot: str) -> str:
    """Rotate tokens left by one and append the pivot marker.

    Invertible: drop the trailing marker token, rotate right by one.
    """
    tokens = text.split()
    rotated = tokens[1:] + tokens[:1] if len(tokens) > 1 else tokens
    return " ".join(rotated + [translate_marker(pivot)])


def stub_untranslate(text: str, pivot: str) -> str:
    """Inverse of stub_translate, for round-trip checks."""
    tokens = text.split()
    if not tokens or tokens[-1] != translate_marker(pivot):
        raise ValueError("text does not carry the stub translation marker")
    tokens = tokens[:-1]
    rotated = tokens[-1:] + tokens[:-1] if len(tokens) > 1 else tokens
    return " ".join(rotated)
