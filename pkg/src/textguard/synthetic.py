"""Synthetic desk-scale sentiment corpus.

Template-generated two-class review snippets sized so that the whole
pipeline (victim training, attacks, detector training, defense) runs in
seconds. Class evidence comes from marker words; a small fraction of
marker slots use rarer variants so natural text is not perfectly uniform.
"""

from __future__ import annotations

import numpy as np

from .corpus import Dataset, TextSample
from .rng import derive_seed

SUBJECTS = (
    "film", "story", "plot", "acting", "cast", "script", "pacing", "visuals",
    "direction", "ending", "dialogue", "music", "scenes", "humor", "tone", "style",
)

VERBS_PRESENT = (
    "is", "feels", "seems", "looks", "remains", "stays", "turns", "gets",
)
VERBS_PAST = (
    "was", "felt", "seemed", "looked", "remained", "stayed", "turned", "got",
)

ADVERBS = (
    "really", "truly", "quite", "rather", "simply", "surely", "certainly", "fairly",
)

POS_COMMON = (
    "good", "great", "wonderful", "excellent", "enjoyable", "pleasant",
    "charming", "delightful", "impressive", "engaging", "clever", "lively",
)
POS_RARE = ("superb", "splendid", "stellar", "graceful", "vibrant", "polished")

NEG_COMMON = (
    "bad", "awful", "terrible", "boring", "dull", "poor",
    "dreadful", "tedious", "bland", "messy", "weak", "clumsy",
)
NEG_RARE = ("dismal", "dire", "lousy", "sloppy", "hollow", "stale")

MARKERS = {0: (NEG_COMMON, NEG_RARE), 1: (POS_COMMON, POS_RARE)}

_TEMPLATES = (
    "the {subj} {verb} {adv} {m1}",
    "the {subj} {verb} {m1} and the {subj2} {verb2} {m2}",
    "it {verb_past} a {m1} {subj} with {adv} {m2} {subj2}",
    "i found the {subj} {adv} {m1}",
    "it is a {m1} {subj} and the {subj2} {verb} {m2}",
    "the {subj} {verb} {m1} from start to finish",
    "{adv} {m1} {subj} with a {m2} {subj2}",
    "the {subj} and the {subj2} {verb_are} {adv} {m1}",
)

_POSITIVE_ONLY = ("do not miss this {m1} {subj}",)
_NEGATIVE_ONLY = ("do not bother with this {m1} {subj}",)


def _pick(rng: np.random.Generator, pool) -> str:
    return pool[int(rng.integers(0, len(pool)))]


def _marker(rng: np.random.Generator, label: int, rare_rate: float) -> str:
    common, rare = MARKERS[label]
    if rng.random() < rare_rate:
        return _pick(rng, rare)
    return _pick(rng, common)


def make_sentence(label: int, rng_seed: int, rare_rate: float = 0.1) -> str:
    rng = np.random.default_rng(rng_seed)
    class_extra = _POSITIVE_ONLY if label == 1 else _NEGATIVE_ONLY
    templates = _TEMPLATES + class_extra
    template = templates[int(rng.integers(0, len(templates)))]
    verb_idx = int(rng.integers(0, len(VERBS_PRESENT)))
    verb2_idx = int(rng.integers(0, len(VERBS_PRESENT)))
    subj = _pick(rng, SUBJECTS)
    subj2 = _pick(rng, tuple(s for s in SUBJECTS if s != subj))
    text = template.format(
        subj=subj,
        subj2=subj2,
        verb=VERBS_PRESENT[verb_idx],
        verb2=VERBS_PRESENT[verb2_idx],
        verb_past=VERBS_PAST[verb_idx],
        verb_are="are" if rng.random() < 0.5 else "were",
        adv=_pick(rng, ADVERBS),
        m1=_marker(rng, label, rare_rate),
        m2=_marker(rng, label, rare_rate),
    )
    if rng.random() < 0.6:
        text += " ."
    return text


def make_desk_corpus(
    n: int,
    seed: int,
    split: str = "train",
    rare_rate: float = 0.1,
) -> Dataset:
    """Balanced two-class corpus of n template sentences."""
    samples = []
    for i in range(n):
        label = i % 2
        text = make_sentence(label, derive_seed(seed, split, i), rare_rate=rare_rate)
        samples.append(
            TextSample(id=f"{split}-{seed}-{i:05d}", text=text, label=label)
        )
    return Dataset(samples=samples, num_classes=2, split=split)
