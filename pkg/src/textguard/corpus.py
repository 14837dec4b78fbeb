"""Text samples, tokenization, dataset I/O, and string-distance primitives.

Everything here is a pure function over immutable values; the rest of the
toolkit builds on these representations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional


class Provenance(str, Enum):
    ORIGINAL = "original"
    ARTIFICIAL = "artificial"
    ADVERSARIAL = "adversarial"
    TRANSFORMED = "transformed"
    AUGMENTED = "augmented"


class CorpusError(ValueError):
    """Raised for malformed datasets or invalid sample fields."""


@dataclass(frozen=True)
class TextSample:
    """A single text with optional gold label and provenance tag."""

    id: str
    text: str
    label: Optional[int] = None
    provenance: Provenance = Provenance.ORIGINAL
    detector_label: Optional[int] = None
    source_id: Optional[str] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.text.strip():
            raise CorpusError(f"sample {self.id!r}: text is empty after trimming")
        if self.label is not None and self.label < 0:
            raise CorpusError(f"sample {self.id!r}: negative label {self.label}")

    def replace(self, **kwargs) -> "TextSample":
        fields = {
            "id": self.id,
            "text": self.text,
            "label": self.label,
            "provenance": self.provenance,
            "detector_label": self.detector_label,
            "source_id": self.source_id,
            "meta": dict(self.meta),
        }
        fields.update(kwargs)
        return TextSample(**fields)

    def to_record(self) -> dict:
        rec = {"id": self.id, "text": self.text}
        if self.label is not None:
            rec["label"] = self.label
        rec["provenance"] = self.provenance.value
        if self.detector_label is not None:
            rec["detector_label"] = self.detector_label
        if self.source_id is not None:
            rec["source_id"] = self.source_id
        if self.meta:
            rec["meta"] = self.meta
        return rec


@dataclass(frozen=True)
class TokenizedText:
    """Tokens plus their character offsets into the source text."""

    source: str
    tokens: tuple[str, ...]
    spans: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.tokens)

    def with_token(self, index: int, replacement: str) -> str:
        """Rebuild the source text with token `index` replaced.

        Splicing through the recorded span keeps all surrounding
        whitespace and punctuation byte-for-byte intact.
        """
        start, end = self.spans[index]
        return self.source[:start] + replacement + self.source[end:]

    def without_token(self, index: int) -> str:
        """Rebuild the source text with token `index` removed.

        Trailing whitespace after the span is collapsed so that deleting
        a word does not leave a double space behind.
        """
        start, end = self.spans[index]
        rest = self.source[end:]
        if start > 0 and self.source[start - 1].isspace():
            rest = rest.lstrip()
        return (self.source[:start] + rest).strip()


def tokenize(text: str) -> TokenizedText:
    """Split into word and punctuation tokens with reconstructible spans.

    Words are maximal runs of alphanumeric characters; every punctuation
    codepoint becomes its own token; whitespace separates and is not part
    of any token. Case is preserved.
    """
    tokens: list[str] = []
    spans: list[tuple[int, int]] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isalnum():
            j = i + 1
            while j < n and text[j].isalnum():
                j += 1
            tokens.append(text[i:j])
            spans.append((i, j))
            i = j
        else:
            tokens.append(ch)
            spans.append((i, i + 1))
            i += 1
    return TokenizedText(source=text, tokens=tuple(tokens), spans=tuple(spans))


def word_token_indices(tok: TokenizedText) -> list[int]:
    """Indices of tokens that are words (alphanumeric), not punctuation."""
    return [i for i, t in enumerate(tok.tokens) if t[0].isalnum()]


def levenshtein(a: str, b: str) -> int:
    """Minimal number of single-character inserts, deletes, and substitutions."""
    n, m = len(a), len(b)
    if n > m:
        a, b = b, a
        n, m = m, n
    if n == 0:
        return m
    current = list(range(n + 1))
    for i in range(1, m + 1):
        previous, current = current, [i] + [0] * n
        for j in range(1, n + 1):
            add, delete = previous[j] + 1, current[j - 1] + 1
            change = previous[j - 1]
            if a[j - 1] != b[i - 1]:
                change += 1
            current[j] = min(add, delete, change)
    return current[n]


class AlignmentError(ValueError):
    """Token lists are not position-aligned."""


def perturbation_rate(orig: TokenizedText, adv: TokenizedText) -> float:
    """Fraction of aligned token positions whose tokens differ.

    Requires equal-length token lists; character-level edits change token
    counts and must be measured with `levenshtein` instead.
    """
    if len(orig) != len(adv):
        raise AlignmentError(
            f"token counts differ ({len(orig)} vs {len(adv)}); "
            "use an edit-distance constraint for length-changing edits"
        )
    if len(orig) == 0:
        return 0.0
    changed = sum(1 for a, b in zip(orig.tokens, adv.tokens) if a != b)
    return changed / len(orig)


@dataclass
class Dataset:
    samples: list[TextSample]
    num_classes: int
    split: str = "train"

    def __post_init__(self):
        if self.num_classes < 1:
            raise CorpusError(f"num_classes must be positive, got {self.num_classes}")
        for s in self.samples:
            if s.label is not None and s.label >= self.num_classes:
                raise CorpusError(
                    f"sample {s.id!r}: label {s.label} out of range "
                    f"for {self.num_classes} classes"
                )

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)


def _parse_jsonl_record(line: str, lineno: int) -> dict:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(rec, dict):
        raise CorpusError(f"line {lineno}: record is not an object")
    if "text" not in rec:
        raise CorpusError(f"line {lineno}: record missing 'text'")
    return rec


def _coerce_label(value, lineno: int) -> Optional[int]:
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise CorpusError(f"line {lineno}: label {value!r} is not an integer")
    if value < 0:
        raise CorpusError(f"line {lineno}: label {value} is negative")
    return value


def load_dataset(
    path: str | Path,
    format: str = "jsonl",
    num_classes: Optional[int] = None,
    split: str = "train",
) -> Dataset:
    """Load a dataset file into `TextSample`s with stable ordering.

    JSONL records carry at least `text` and usually `label`; the TSV
    fallback is one `label<TAB>text` pair per line. Samples default to
    provenance=original unless the record says otherwise.
    """
    path = Path(path)
    samples: list[TextSample] = []
    max_label = -1
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if format == "jsonl":
                rec = _parse_jsonl_record(line, lineno)
                label = _coerce_label(rec.get("label"), lineno)
                sample = TextSample(
                    id=str(rec.get("id", f"{path.stem}-{lineno}")),
                    text=rec["text"],
                    label=label,
                    provenance=Provenance(rec.get("provenance", "original")),
                    detector_label=rec.get("detector_label"),
                    source_id=rec.get("source_id"),
                    meta=rec.get("meta", {}),
                )
            elif format == "tsv":
                if "\t" not in line:
                    raise CorpusError(f"line {lineno}: expected 'label<TAB>text'")
                raw_label, text = line.split("\t", 1)
                try:
                    label = int(raw_label)
                except ValueError as exc:
                    raise CorpusError(
                        f"line {lineno}: label {raw_label!r} is not an integer"
                    ) from exc
                label = _coerce_label(label, lineno)
                sample = TextSample(id=f"{path.stem}-{lineno}", text=text, label=label)
            else:
                raise CorpusError(f"unknown dataset format {format!r}")
            if sample.label is not None:
                max_label = max(max_label, sample.label)
            samples.append(sample)
    if num_classes is None:
        num_classes = max(max_label + 1, 2)
    return Dataset(samples=samples, num_classes=num_classes, split=split)


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write one JSON object per line; key order is fixed for diffability."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for sample in dataset.samples:
            fh.write(json.dumps(sample.to_record(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def bag_cosine(a: str, b: str) -> float:
    """Cosine similarity of lowercase term-frequency bags.

    Stand-in similarity function for attack constraints; any callable
    with the same (orig, candidate) -> float shape can replace it.
    """
    ta = [t.lower() for t in tokenize(a).tokens]
    tb = [t.lower() for t in tokenize(b).tokens]
    if not ta or not tb:
        return 1.0 if ta == tb else 0.0
    ca: dict[str, int] = {}
    cb: dict[str, int] = {}
    for t in ta:
        ca[t] = ca.get(t, 0) + 1
    for t in tb:
        cb[t] = cb.get(t, 0) + 1
    dot = sum(v * cb.get(k, 0) for k, v in ca.items())
    na = sum(v * v for v in ca.values()) ** 0.5
    nb = sum(v * v for v in cb.values()) ** 0.5
    return dot / (na * nb)
