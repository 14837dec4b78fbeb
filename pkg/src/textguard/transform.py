"""The six-function transformation set used by the defense framework.

Each transform rewrites an input while keeping its meaning recognizable:
back translation, masked-LM suggestion, adverb insertion, tense change,
synonym swap, and contraction. The two model-dependent functions carry
deterministic rule-based fallbacks so the toolkit runs without a backend.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .backend import (
    BackendEndpoint,
    BackendError,
    FALLBACK_RULE_BASED,
    remote_mlm,
    remote_translate,
)
from .corpus import tokenize
from .lexicon import (
    MorphRules,
    Thesaurus,
    inflect_verb,
    is_verb_candidate,
    synonyms,
)
from .perturb import MIN_WORD_LEN, _match_case, _splice, _whitespace_token_index
from .rng import derive_seed

BACK_TRANSLATION = "back_translation"
MLM_SUGGESTION = "mlm_suggestion"
ADVERB_INSERTION = "adverb_insertion"
TENSE_CHANGE = "tense_change"
SYNONYM_SWAP = "synonym_swap"
CONTRACTION = "contraction"

TRANSFORM_IDS = (
    BACK_TRANSLATION,
    MLM_SUGGESTION,
    ADVERB_INSERTION,
    TENSE_CHANGE,
    SYNONYM_SWAP,
    CONTRACTION,
)

BACKEND_TRANSFORMS = frozenset({BACK_TRANSLATION, MLM_SUGGESTION})

SYNONYM_SWAP_RATE = 0.2
MLM_TOUCH_RATE = 0.15
DEFAULT_PIVOT = "de"


@dataclass(frozen=True)
class TransformReport:
    fn_id: str
    input_text: str
    output_text: str
    positions: tuple[int, ...] = ()
    fallback_used: bool = False

    def __post_init__(self):
        if self.input_text.strip() and not self.output_text.strip():
            raise ValueError(f"{self.fn_id} produced empty output for non-empty input")


def sample_transforms(rng_seed: int, k: int) -> list[str]:
    """Uniform draw of k distinct transform ids; deterministic per seed."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if k > len(TRANSFORM_IDS):
        raise ValueError(f"k={k} exceeds the {len(TRANSFORM_IDS)} available transforms")
    rng = np.random.default_rng(rng_seed)
    picks = rng.choice(len(TRANSFORM_IDS), size=k, replace=False)
    return [TRANSFORM_IDS[int(i)] for i in picks]


def _swap_positions(tok, thesaurus: Thesaurus) -> list[int]:
    return [
        i
        for i, t in enumerate(tok.tokens)
        if t[0].isalnum()
        and len(t) >= MIN_WORD_LEN
        and not t.isdigit()
        and any(s.isalnum() for s in synonyms(thesaurus, t, 1))
    ]


def _synonym_swap(text: str, thesaurus: Thesaurus, rng_seed: int) -> tuple[str, tuple[int, ...]]:
    """Swap a fifth of eligible words with their rank-1 synonym."""
    tok = tokenize(text)
    eligible = _swap_positions(tok, thesaurus)
    if not eligible:
        return text, ()
    k = min(math.ceil(SYNONYM_SWAP_RATE * len(eligible)), len(eligible))
    rng = np.random.default_rng(rng_seed)
    chosen = sorted(int(eligible[i]) for i in rng.choice(len(eligible), size=k, replace=False))
    replacements = {}
    for pos in chosen:
        top = next(s for s in synonyms(thesaurus, tok.tokens[pos], 5) if s.isalnum())
        replacements[pos] = _match_case(tok.tokens[pos], top)
    return _splice(tok, replacements), tuple(chosen)


def _apply_pairs(text: str, pairs: dict[str, str]) -> tuple[str, int]:
    """Replace each phrase left-to-right, longest phrase first."""
    count = 0
    for src in sorted(pairs, key=len, reverse=True):
        pattern = re.compile(rf"(?<!\w){re.escape(src)}(?!\w)", re.IGNORECASE)

        def repl(match: re.Match) -> str:
            nonlocal count
            count += 1
            out = pairs[src]
            if match.group(0)[:1].isupper():
                out = out[:1].upper() + out[1:]
            return out

        text = pattern.sub(repl, text)
    return text, count


def _contraction(text: str, rules: MorphRules) -> tuple[str, int]:
    """Contract standard phrases; with nothing to contract, expand instead."""
    out, count = _apply_pairs(text, rules.contractions)
    if count == 0:
        out, count = _apply_pairs(text, rules.expansions)
    return out, count


def _verb_positions(tok, rules: MorphRules) -> list[int]:
    return [
        i for i, t in enumerate(tok.tokens)
        if t[0].isalnum() and is_verb_candidate(rules, t)
    ]


def _tense_change(text: str, rules: MorphRules) -> tuple[str, tuple[int, ...]]:
    tok = tokenize(text)
    replacements = {}
    for pos in _verb_positions(tok, rules):
        token = tok.tokens[pos]
        low = token.lower()
        if low in rules.irregular_present or (low.endswith("ed") and len(low) > 4):
            flipped = inflect_verb(rules, token, "present")
        elif low in rules.irregular_past:
            flipped = inflect_verb(rules, token, "past")
        else:
            continue
        if flipped != token:
            replacements[pos] = flipped
    return _splice(tok, replacements), tuple(sorted(replacements))


def _adverb_insertion(text: str, rules: MorphRules, rng_seed: int) -> tuple[str, tuple[int, ...]]:
    """Insert one adverb before the first detected verb (or at the front)."""
    if not rules.adverbs:
        return text, ()
    tok = tokenize(text)
    rng = np.random.default_rng(rng_seed)
    adverb = rules.adverbs[int(rng.integers(0, len(rules.adverbs)))]
    verbs = _verb_positions(tok, rules)
    if verbs:
        pos = verbs[0]
        start = tok.spans[pos][0]
        return text[:start] + adverb + " " + text[start:], (pos,)
    return adverb + " " + text, (0,)


def _mlm_suggestion(
    text: str,
    thesaurus: Optional[Thesaurus],
    endpoint: Optional[BackendEndpoint],
    rng_seed: int,
    top_k: int = 5,
) -> tuple[str, tuple[int, ...], bool]:
    def fallback() -> tuple[str, tuple[int, ...], bool]:
        if thesaurus is None:
            raise BackendError("mlm_suggestion fallback requires a thesaurus")
        out, positions = _synonym_swap(text, thesaurus, rng_seed)
        return out, positions, True

    if endpoint is None or not endpoint.supports("mlm"):
        if endpoint is None or endpoint.fallback == FALLBACK_RULE_BASED:
            return fallback()
        raise BackendError("mlm_suggestion needs an 'mlm' endpoint or rule_based fallback")
    tok = tokenize(text)
    eligible = [
        i for i, t in enumerate(tok.tokens)
        if t[0].isalnum() and len(t) >= MIN_WORD_LEN and not t.isdigit()
    ]
    if not eligible:
        return text, (), False
    k = min(math.ceil(MLM_TOUCH_RATE * len(eligible)), len(eligible))
    rng = np.random.default_rng(rng_seed)
    chosen = sorted(int(eligible[i]) for i in rng.choice(len(eligible), size=k, replace=False))
    mask_indices = [_whitespace_token_index(text, tok.spans[p][0]) for p in chosen]
    try:
        ranked = remote_mlm(endpoint, text, mask_indices, top_k=top_k)
    except BackendError:
        if endpoint.fallback == FALLBACK_RULE_BASED:
            return fallback()
        raise
    replacements = {}
    for pos, options in zip(chosen, ranked):
        original = tok.tokens[pos].lower()
        pick = next((s for s in options if s.lower() != original and s.isalnum()), None)
        if pick is not None:
            replacements[pos] = _match_case(tok.tokens[pos], pick)
    return _splice(tok, replacements), tuple(sorted(replacements)), False


def _back_translation(
    text: str,
    thesaurus: Optional[Thesaurus],
    rules: Optional[MorphRules],
    endpoint: Optional[BackendEndpoint],
    rng_seed: int,
    pivot: str = DEFAULT_PIVOT,
) -> tuple[str, bool]:
    def fallback() -> tuple[str, bool]:
        if thesaurus is None or rules is None:
            raise BackendError("back_translation fallback requires a thesaurus and morph rules")
        swapped, _ = _synonym_swap(text, thesaurus, rng_seed)
        contracted, _ = _contraction(swapped, rules)
        return contracted, True

    if endpoint is None or not endpoint.supports("translate"):
        if endpoint is None or endpoint.fallback == FALLBACK_RULE_BASED:
            return fallback()
        raise BackendError("back_translation needs a 'translate' endpoint or rule_based fallback")
    try:
        return remote_translate(endpoint, text, pivot=pivot), False
    except BackendError:
        if endpoint.fallback == FALLBACK_RULE_BASED:
            return fallback()
        raise


@dataclass(frozen=True)
class TransformContext:
    """Resources every transform may draw on."""

    thesaurus: Thesaurus
    morph_rules: MorphRules
    endpoint: Optional[BackendEndpoint] = None
    pivot: str = DEFAULT_PIVOT


def apply_transform(
    fn_id: str,
    text: str,
    context: TransformContext,
    rng_seed: int = 0,
) -> TransformReport:
    """Apply one transformation function; deterministic for a fixed seed."""
    if fn_id not in TRANSFORM_IDS:
        raise ValueError(f"unknown transform {fn_id!r}")
    positions: tuple[int, ...] = ()
    fallback_used = False
    if fn_id == CONTRACTION:
        out, _ = _contraction(text, context.morph_rules)
    elif fn_id == SYNONYM_SWAP:
        out, positions = _synonym_swap(text, context.thesaurus, rng_seed)
    elif fn_id == TENSE_CHANGE:
        out, positions = _tense_change(text, context.morph_rules)
    elif fn_id == ADVERB_INSERTION:
        out, positions = _adverb_insertion(text, context.morph_rules, rng_seed)
    elif fn_id == MLM_SUGGESTION:
        out, positions, fallback_used = _mlm_suggestion(
            text, context.thesaurus, context.endpoint, rng_seed
        )
    else:
        out, fallback_used = _back_translation(
            text, context.thesaurus, context.morph_rules, context.endpoint,
            rng_seed, pivot=context.pivot,
        )
    return TransformReport(
        fn_id=fn_id,
        input_text=text,
        output_text=out,
        positions=positions,
        fallback_used=fallback_used,
    )


def transform_variants(
    text: str,
    ids: list[str],
    context: TransformContext,
    rng_seed: int,
) -> list[TransformReport]:
    """One report per transform id, each with its own derived seed."""
    return [
        apply_transform(fn_id, text, context, rng_seed=derive_seed(rng_seed, fn_id))
        for fn_id in ids
    ]
