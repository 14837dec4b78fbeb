"""Detector-guided data augmentation.

Random synonym substitution generates candidate augmented sequences; the
anomaly detector rejects candidates it still considers natural, keeping
the first one it flags. Selected candidates sit farther from the
training distribution and add more diversity than unselected ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Dataset, Provenance, TextSample, tokenize
from .detector import DetectorModel, anomaly_score
from .lexicon import Thesaurus, synonyms
from .perturb import MIN_WORD_LEN, _match_case, _splice
from .rng import derive_seed


@dataclass(frozen=True)
class AugmentConfig:
    p: float = 30.0            # percentage of words to substitute
    s: int = 50                # synonym rank cutoff
    max_attempts: int = 25
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.p <= 100:
            raise ValueError(f"p must be in (0, 100], got {self.p}")
        if self.s < 1:
            raise ValueError(f"s must be >= 1, got {self.s}")
        if self.max_attempts < 1:
            raise ValueError(f"max_attempts must be >= 1, got {self.max_attempts}")


@dataclass(frozen=True)
class SubstitutionResult:
    text: str
    target: int
    substituted: int
    shortfall: bool


def candidate_space_size(n: int, p: float, s: int) -> int:
    """Number of distinct augmented sequences reachable for an n-word text."""
    k = math.ceil(p / 100.0 * n)
    return math.comb(n, k) * s ** k


def random_synonym_substitute(
    text: str,
    config: AugmentConfig,
    thesaurus: Thesaurus,
    rng_seed: int,
) -> SubstitutionResult:
    """Substitute ceil(p% * n) words, each with a uniform pick from its
    top-s synonyms.

    `n` counts word tokens; substitution positions are drawn from the
    thesaurus-covered words of length >= 3. When fewer covered words
    exist than the target, all of them are substituted and the result is
    flagged as a shortfall.
    """
    tok = tokenize(text)
    words = [i for i, t in enumerate(tok.tokens) if t[0].isalnum() and not t.isdigit()]
    target = math.ceil(config.p / 100.0 * len(words)) if words else 0
    eligible = [
        i for i in words
        if len(tok.tokens[i]) >= MIN_WORD_LEN
        and any(s.isalnum() for s in synonyms(thesaurus, tok.tokens[i], config.s))
    ]
    k = min(target, len(eligible))
    rng = np.random.default_rng(rng_seed)
    replacements: dict[int, str] = {}
    if k > 0:
        chosen = sorted(int(eligible[i]) for i in rng.choice(len(eligible), size=k, replace=False))
        for pos in chosen:
            options = [s for s in synonyms(thesaurus, tok.tokens[pos], config.s) if s.isalnum()]
            pick = options[int(rng.integers(0, len(options)))]
            replacements[pos] = _match_case(tok.tokens[pos], pick)
    return SubstitutionResult(
        text=_splice(tok, replacements),
        target=target,
        substituted=k,
        shortfall=k < target,
    )


def detector_guided_augment(
    train: Dataset,
    detector: DetectorModel,
    config: AugmentConfig,
    thesaurus: Thesaurus,
) -> Dataset:
    """One augmented variant per original, selected by the detector.

    Candidates are generated until the detector flags one as anomalous;
    if max_attempts runs out, the highest-scoring candidate is kept and
    flagged as exhausted so experiments can exclude it.
    """
    out: list[TextSample] = []
    for sample in train.samples:
        best_text = None
        best_score = -1.0
        accepted = None
        attempts = 0
        for attempt in range(1, config.max_attempts + 1):
            attempts = attempt
            seed = derive_seed(config.seed, "augment", sample.id, attempt)
            candidate = random_synonym_substitute(sample.text, config, thesaurus, seed)
            score = anomaly_score(detector, candidate.text)
            if score > best_score:
                best_text, best_score = candidate.text, score
            if score > detector.threshold:
                accepted = candidate.text
                break
        meta = {
            "attempts": attempts,
            "score": best_score if accepted is None else anomaly_score(detector, accepted),
            "p": config.p,
            "s": config.s,
            "word_pool": "thesaurus-covered words of length >= 3",
        }
        if accepted is None:
            meta["exhausted"] = True
            accepted = best_text
        out.append(sample)
        out.append(
            TextSample(
                id=f"{sample.id}#aug",
                text=accepted,
                label=sample.label,
                provenance=Provenance.AUGMENTED,
                source_id=sample.id,
                meta=meta,
            )
        )
    return Dataset(samples=out, num_classes=train.num_classes, split=train.split)


def unguided_augment(
    train: Dataset,
    config: AugmentConfig,
    thesaurus: Thesaurus,
) -> Dataset:
    """Baseline: one random substitution variant per original, no selection."""
    out: list[TextSample] = []
    for sample in train.samples:
        seed = derive_seed(config.seed, "augment", sample.id, 1)
        candidate = random_synonym_substitute(sample.text, config, thesaurus, seed)
        out.append(sample)
        out.append(
            TextSample(
                id=f"{sample.id}#aug",
                text=candidate.text,
                label=sample.label,
                provenance=Provenance.AUGMENTED,
                source_id=sample.id,
                meta={"p": config.p, "s": config.s},
            )
        )
    return Dataset(samples=out, num_classes=train.num_classes, split=train.split)
