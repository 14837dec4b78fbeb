"""Loadable linguistic resources: ranked thesaurus and morphology rules.

The toolkit embeds no lexical database; resources are plain text files
(a WordNet-derived thesaurus can be exported offline into the TSV
format) and immutable after load.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

logger = logging.getLogger(__name__)


class ResourceError(ValueError):
    """Raised for malformed resource files."""


@dataclass(frozen=True)
class Thesaurus:
    """Map from lowercase word to its ranked synonyms, most similar first."""

    entries: dict[str, tuple[str, ...]]

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def synonyms(thesaurus: Thesaurus, word: str, s: int) -> list[str]:
    """First `s` ranked synonyms of `word`; empty list if the word is absent."""
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    ranked = thesaurus.entries.get(word.lower(), ())
    return list(ranked[:s])


def load_thesaurus(path: str | Path) -> Thesaurus:
    """Parse a `word<TAB>syn1,syn2,...` TSV into a Thesaurus.

    Lines starting with '#' are header/comment lines (the ranking
    criterion of the resource is documented there). Headwords are
    lowercased, self-references dropped, and synonym lists deduplicated
    with order preserved. A repeated headword replaces the earlier entry.
    """
    path = Path(path)
    entries: dict[str, tuple[str, ...]] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if "\t" not in line:
                raise ResourceError(f"{path.name}:{lineno}: expected 'word<TAB>synonyms'")
            head, rest = line.split("\t", 1)
            head = head.strip().lower()
            if not head:
                raise ResourceError(f"{path.name}:{lineno}: empty headword")
            seen: set[str] = set()
            ranked: list[str] = []
            for raw in rest.split(","):
                syn = raw.strip().lower()
                if not syn or syn == head or syn in seen:
                    continue
                seen.add(syn)
                ranked.append(syn)
            if head in entries:
                logger.warning("%s:%d: duplicate headword %r replaces earlier entry", path.name, lineno, head)
            entries[head] = tuple(ranked)
    return Thesaurus(entries=entries)


@dataclass(frozen=True)
class MorphRules:
    """Contraction pairs, adverb inventory, and verb tense rules."""

    contractions: dict[str, str]          # expanded phrase -> contracted form
    adverbs: tuple[str, ...]
    irregular_present: dict[str, str]     # past form -> present (3sg) form
    irregular_past: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.irregular_past:
            object.__setattr__(
                self,
                "irregular_past",
                {present: past for past, present in self.irregular_present.items()},
            )

    @property
    def expansions(self) -> dict[str, str]:
        return {contracted: expanded for expanded, contracted in self.contractions.items()}


_SECTIONS = ("CONTRACTIONS", "ADVERBS", "IRREGULAR_VERBS")


def load_morph_rules(path: str | Path) -> MorphRules:
    """Parse the keyed morphology file (sections: CONTRACTIONS, ADVERBS, IRREGULAR_VERBS)."""
    path = Path(path)
    section = None
    contractions: dict[str, str] = {}
    adverbs: list[str] = []
    irregular: dict[str, str] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                name = line[1:-1]
                if name not in _SECTIONS:
                    raise ResourceError(f"{path.name}:{lineno}: unknown section {name!r}")
                section = name
                continue
            if section == "CONTRACTIONS":
                if "\t" not in line:
                    raise ResourceError(f"{path.name}:{lineno}: expected 'expanded<TAB>contracted'")
                expanded, contracted = (p.strip().lower() for p in line.split("\t", 1))
                if expanded in contractions or contracted in contractions.values():
                    raise ResourceError(f"{path.name}:{lineno}: contraction pair {expanded!r} mapped twice")
                contractions[expanded] = contracted
            elif section == "ADVERBS":
                adverbs.append(line.lower())
            elif section == "IRREGULAR_VERBS":
                if "\t" not in line:
                    raise ResourceError(f"{path.name}:{lineno}: expected 'past<TAB>present'")
                past, present = (p.strip().lower() for p in line.split("\t", 1))
                irregular[past] = present
            else:
                raise ResourceError(f"{path.name}:{lineno}: content before any section header")
    return MorphRules(
        contractions=contractions,
        adverbs=tuple(adverbs),
        irregular_present=irregular,
    )


_VOWELS = "aeiou"


def _present_of(word: str) -> str:
    """Suffix rules mapping a past form to a present (3sg) form."""
    if word.endswith("ied") and len(word) > 4:
        return word[:-3] + "ies"
    if word.endswith("ed") and len(word) > 3:
        stem = word[:-2]
        # undo consonant doubling: stopped -> stop
        if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in _VOWELS + "ls":
            stem = stem[:-1]
        if stem.endswith(("s", "x", "z", "ch", "sh", "o")):
            return stem + "es"
        return stem + "s"
    return word


def _past_of(word: str) -> str:
    """Suffix rules mapping a present form to a past form."""
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "ied"
    if word.endswith("es") and len(word) > 3 and word[:-2].endswith(("s", "x", "z", "ch", "sh", "o")):
        return word[:-2] + "ed"
    if word.endswith("s") and len(word) > 2:
        word = word[:-1]
    if word.endswith("e"):
        return word + "d"
    # double a final consonant after a short vowel: stop -> stopped
    if (
        len(word) >= 3
        and word[-1] not in _VOWELS + "wxy"
        and word[-2] in _VOWELS
        and word[-3] not in _VOWELS
    ):
        return word + word[-1] + "ed"
    return word + "ed"


def inflect_verb(rules: MorphRules, token: str, target: str) -> str:
    """Re-inflect a candidate verb to the target tense.

    The irregular table is consulted before the suffix rules; a token the
    rules cannot interpret is returned unchanged. Case of the first
    letter is preserved. Idempotent for a fixed target tense.
    """
    if target not in ("past", "present"):
        raise ValueError(f"target tense must be 'past' or 'present', got {target!r}")
    low = token.lower()
    if target == "present":
        if low in rules.irregular_past:        # already a known present form
            return token
        if low in rules.irregular_present:     # known past form in the table
            out = rules.irregular_present[low]
        elif low.endswith("ed") and len(low) > 3:
            out = _present_of(low)
        else:
            return token
    else:
        if low in rules.irregular_present:     # already a known past form
            return token
        if low in rules.irregular_past:        # known present form in the table
            out = rules.irregular_past[low]
        elif low.endswith("ed") and len(low) > 3:
            return token                       # already past by suffix
        elif low.endswith("s") and len(low) > 2:
            out = _past_of(low)
        else:
            return token
    if token[:1].isupper():
        out = out[:1].upper() + out[1:]
    return out


def is_verb_candidate(rules: MorphRules, token: str) -> bool:
    """Closed heuristic for verb candidacy; no POS tagger involved."""
    low = token.lower()
    if low in rules.irregular_present or low in rules.irregular_past:
        return True
    return low.endswith("ed") and len(low) > 4


def default_thesaurus_path() -> Path:
    return Path(str(resources.files("textguard").joinpath("data/thesaurus.tsv")))


def default_morph_rules_path() -> Path:
    return Path(str(resources.files("textguard").joinpath("data/morph_rules.txt")))


def load_default_thesaurus() -> Thesaurus:
    return load_thesaurus(default_thesaurus_path())


def load_default_morph_rules() -> MorphRules:
    return load_morph_rules(default_morph_rules_path())
