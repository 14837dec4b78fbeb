"""Attack-style single-shot perturbation generators.

These mimic how each attack family edits a sentence, but apply the edit
exactly once and never query a victim. Their output trains the anomaly
detector's first stage.
"""

from __future__ import annotations

import logging
import math
import string
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .backend import BackendEndpoint, BackendError, FALLBACK_RULE_BASED, remote_mlm
from .corpus import Dataset, Provenance, TextSample, tokenize
from .lexicon import Thesaurus, synonyms
from .rng import derive_seed

logger = logging.getLogger(__name__)

FAMILY_CHAR_OPS = "char_ops"
FAMILY_THESAURUS_SUB = "thesaurus_sub"
FAMILY_MLM_SUB = "mlm_sub"
FAMILIES = (FAMILY_CHAR_OPS, FAMILY_THESAURUS_SUB, FAMILY_MLM_SUB)

_CHAR_OPS = ("substitute", "insert", "delete", "swap")
_LETTERS = string.ascii_lowercase

_DEFAULT_RATES = {
    FAMILY_CHAR_OPS: 0.15,
    FAMILY_THESAURUS_SUB: 0.3,
    FAMILY_MLM_SUB: 0.15,
}

MIN_WORD_LEN = 3  # 1-2 char tokens are stopword-like and never touched


@dataclass(frozen=True)
class PerturbFamily:
    kind: str
    rate: Optional[float] = None
    char_mix: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise ValueError(f"unknown perturbation family {self.kind!r}")
        rate = self.effective_rate
        if not 0.0 < rate <= 1.0:
            raise ValueError(f"rate must be in (0,1], got {rate}")
        if abs(sum(self.char_mix) - 1.0) > 1e-9:
            raise ValueError(f"char-op mix weights must sum to 1, got {self.char_mix}")

    @property
    def effective_rate(self) -> float:
        return self.rate if self.rate is not None else _DEFAULT_RATES[self.kind]


def _eligible_word_positions(tok) -> list[int]:
    return [
        i
        for i, t in enumerate(tok.tokens)
        if t[0].isalnum() and len(t) >= MIN_WORD_LEN and not t.isdigit()
    ]


def _pick_positions(rng: np.random.Generator, eligible: list[int], rate: float) -> list[int]:
    k = min(math.ceil(rate * len(eligible)), len(eligible))
    if k == 0:
        return []
    chosen = rng.choice(len(eligible), size=k, replace=False)
    return sorted(eligible[int(i)] for i in chosen)


def _apply_char_op(word: str, op: str, rng: np.random.Generator) -> str:
    """One character edit keeping the first and last characters in place."""
    if op == "swap" and len(word) < 4:
        op = "substitute"
    if op == "swap":
        pairs = [i for i in range(1, len(word) - 2) if word[i] != word[i + 1]]
        if not pairs:
            op = "substitute"
        else:
            i = int(rng.choice(pairs))
            return word[:i] + word[i + 1] + word[i] + word[i + 2:]
    if op == "substitute":
        i = int(rng.integers(1, len(word) - 1))
        choices = [c for c in _LETTERS if c != word[i].lower()]
        return word[:i] + str(rng.choice(choices)) + word[i + 1:]
    if op == "insert":
        i = int(rng.integers(1, len(word)))
        return word[:i] + str(rng.choice(list(_LETTERS))) + word[i:]
    if op == "delete":
        i = int(rng.integers(1, len(word) - 1))
        return word[:i] + word[i + 1:]
    raise ValueError(f"unknown char op {op!r}")


def _splice(tok, replacements: dict[int, str]) -> str:
    """Replace tokens by position, splicing right to left to keep spans valid."""
    text = tok.source
    for pos in sorted(replacements, reverse=True):
        start, end = tok.spans[pos]
        text = text[:start] + replacements[pos] + text[end:]
    return text


def char_perturb(
    text: str,
    params: PerturbFamily | None = None,
    rng_seed: int = 0,
) -> tuple[str, bool]:
    """Apply one character operation to each selected word.

    Substitution, deletion, and swap touch interior characters only, so
    a modified word stays within Levenshtein distance 2 of the original.
    Returns (text, changed); unmodifiable input comes back unchanged.
    """
    params = params or PerturbFamily(FAMILY_CHAR_OPS)
    tok = tokenize(text)
    eligible = _eligible_word_positions(tok)
    if not eligible:
        return text, False
    rng = np.random.default_rng(rng_seed)
    positions = _pick_positions(rng, eligible, params.effective_rate)
    replacements: dict[int, str] = {}
    for pos in positions:
        op = str(rng.choice(_CHAR_OPS, p=params.char_mix))
        replacements[pos] = _apply_char_op(tok.tokens[pos], op, rng)
    out = _splice(tok, replacements)
    return out, out != text


def _single_word_synonyms(thesaurus: Thesaurus, word: str, s: int = 10**9) -> list[str]:
    return [syn for syn in synonyms(thesaurus, word, s) if syn.isalnum()]


def _match_case(original: str, replacement: str) -> str:
    if original[:1].isupper():
        return replacement[:1].upper() + replacement[1:]
    return replacement


def synonym_perturb(
    text: str,
    rate: float,
    thesaurus: Thesaurus,
    rng_seed: int = 0,
) -> tuple[str, bool]:
    """Substitute a portion of thesaurus-covered words by a random synonym.

    Exactly ceil(rate * n_covered) words are replaced; single-word
    synonyms only, so the token count never changes.
    """
    tok = tokenize(text)
    eligible = [
        i for i in _eligible_word_positions(tok)
        if _single_word_synonyms(thesaurus, tok.tokens[i])
    ]
    if not eligible:
        return text, False
    rng = np.random.default_rng(rng_seed)
    positions = _pick_positions(rng, eligible, rate)
    replacements: dict[int, str] = {}
    for pos in positions:
        options = _single_word_synonyms(thesaurus, tok.tokens[pos])
        pick = str(options[int(rng.integers(0, len(options)))])
        replacements[pos] = _match_case(tok.tokens[pos], pick)
    out = _splice(tok, replacements)
    return out, out != text


def _whitespace_token_index(text: str, char_pos: int) -> int:
    """Index of the whitespace-delimited field containing `char_pos`."""
    index = -1
    in_field = False
    for i, ch in enumerate(text):
        if ch.isspace():
            in_field = False
        elif not in_field:
            in_field = True
            index += 1
        if i == char_pos:
            return index
    raise IndexError(f"char position {char_pos} out of range")


def mlm_perturb(
    text: str,
    rate: float,
    endpoint: Optional[BackendEndpoint],
    rng_seed: int = 0,
    thesaurus: Optional[Thesaurus] = None,
    top_k: int = 5,
) -> tuple[str, bool]:
    """Replace selected words with masked-LM suggestions from the backend.

    A suggestion equal to the original word is skipped in favor of the
    next-ranked one. Without a usable `mlm` capability the rule-based
    fallback reproduces `synonym_perturb` for the same seed.
    """
    def fallback() -> tuple[str, bool]:
        if thesaurus is None:
            raise BackendError("mlm fallback requires a thesaurus")
        return synonym_perturb(text, rate, thesaurus, rng_seed)

    if endpoint is None or not endpoint.supports("mlm"):
        if endpoint is None or endpoint.fallback == FALLBACK_RULE_BASED:
            return fallback()
        raise BackendError("no endpoint with 'mlm' capability and fallback policy is 'error'")

    tok = tokenize(text)
    eligible = _eligible_word_positions(tok)
    if not eligible:
        return text, False
    rng = np.random.default_rng(rng_seed)
    positions = _pick_positions(rng, eligible, rate)
    if not positions:
        return text, False
    mask_indices = [_whitespace_token_index(text, tok.spans[p][0]) for p in positions]
    try:
        suggestions = remote_mlm(endpoint, text, mask_indices, top_k=top_k)
    except BackendError:
        if endpoint.fallback == FALLBACK_RULE_BASED:
            return fallback()
        raise
    replacements: dict[int, str] = {}
    for pos, ranked in zip(positions, suggestions):
        original = tok.tokens[pos].lower()
        pick = next(
            (s for s in ranked if s.lower() != original and s.isalnum()), None
        )
        if pick is not None:
            replacements[pos] = _match_case(tok.tokens[pos], pick)
    out = _splice(tok, replacements)
    return out, out != text


def perturb_once(
    text: str,
    family: PerturbFamily,
    rng_seed: int,
    thesaurus: Optional[Thesaurus] = None,
    endpoint: Optional[BackendEndpoint] = None,
) -> tuple[str, bool]:
    """Dispatch a single perturbation by family."""
    if family.kind == FAMILY_CHAR_OPS:
        return char_perturb(text, family, rng_seed)
    if family.kind == FAMILY_THESAURUS_SUB:
        if thesaurus is None:
            raise ValueError("thesaurus_sub family requires a thesaurus")
        return synonym_perturb(text, family.effective_rate, thesaurus, rng_seed)
    if family.kind == FAMILY_MLM_SUB:
        return mlm_perturb(text, family.effective_rate, endpoint, rng_seed, thesaurus)
    raise ValueError(f"unknown perturbation family {family.kind!r}")


def make_artificial_dataset(
    data: Dataset,
    family: PerturbFamily,
    rng_seed: int,
    thesaurus: Optional[Thesaurus] = None,
    endpoint: Optional[BackendEndpoint] = None,
) -> tuple[Dataset, int]:
    """Pair every sample with one perturbed counterpart for detector training.

    Originals carry detector label 0, artificial twins detector label 1;
    samples the family cannot modify are dropped from the artificial side
    and reported in the returned count.
    """
    out: list[TextSample] = []
    dropped = 0
    for sample in data.samples:
        seed = derive_seed(rng_seed, "perturb", family.kind, sample.id)
        perturbed, changed = perturb_once(
            sample.text, family, seed, thesaurus=thesaurus, endpoint=endpoint
        )
        out.append(sample.replace(detector_label=0))
        if changed:
            out.append(
                TextSample(
                    id=f"{sample.id}#art",
                    text=perturbed,
                    label=sample.label,
                    provenance=Provenance.ARTIFICIAL,
                    detector_label=1,
                    source_id=sample.id,
                )
            )
        else:
            dropped += 1
    if dropped:
        logger.warning("%d of %d samples were unmodifiable and have no artificial twin",
                       dropped, len(data.samples))
    return Dataset(samples=out, num_classes=data.num_classes, split=data.split), dropped
