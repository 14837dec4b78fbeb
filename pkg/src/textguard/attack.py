"""Black-box attack harness with a composable constraint stack.

Character-level and greedy word-level search against any prediction
function, with per-candidate feasibility checks: perturbation rate, edit
distance, semantic similarity, and the anomaly-score constraint that
forces attacks to stay under the detector's radar.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .backend import BackendEndpoint, BackendError, FALLBACK_RULE_BASED, remote_mlm
from .classifier import ProbDist
from .corpus import (
    AlignmentError,
    Provenance,
    TextSample,
    bag_cosine,
    levenshtein,
    perturbation_rate,
    tokenize,
)
from .detector import DetectorModel, anomaly_score
from .lexicon import Thesaurus, synonyms
from .perturb import MIN_WORD_LEN, _apply_char_op, _match_case, _whitespace_token_index
from .rng import derive_seed

PredictFn = Callable[[str], ProbDist]

_CHAR_OPS = ("substitute", "insert", "delete", "swap")


def as_predict_fn(victim) -> PredictFn:
    """Accept a model object with .predict or a bare callable."""
    if hasattr(victim, "predict"):
        return victim.predict
    return victim


@dataclass(frozen=True)
class ConstraintSet:
    max_perturbation_rate: Optional[float] = None
    max_levenshtein: Optional[int] = None
    min_similarity: Optional[float] = None
    similarity_fn: Callable[[str, str], float] = bag_cosine
    detector: Optional[DetectorModel] = None
    anomaly_threshold: float = 0.5

    def __post_init__(self):
        if (
            self.max_perturbation_rate is None
            and self.max_levenshtein is None
            and self.min_similarity is None
            and self.detector is None
        ):
            raise ValueError("a ConstraintSet must configure at least one constraint")
        if self.max_perturbation_rate is not None and not 0 <= self.max_perturbation_rate <= 1:
            raise ValueError("max_perturbation_rate must be within [0,1]")
        if self.max_levenshtein is not None and self.max_levenshtein < 0:
            raise ValueError("max_levenshtein must be non-negative")
        if self.min_similarity is not None and not 0 <= self.min_similarity <= 1:
            raise ValueError("min_similarity must be within [0,1]")


@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    value: Optional[float]
    threshold: float
    passed: bool
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "threshold": self.threshold,
            "passed": self.passed,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class ConstraintAudit:
    checks: tuple[ConstraintCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def check_constraints(orig: str, candidate: str, constraints: ConstraintSet) -> ConstraintAudit:
    """Evaluate every configured constraint on (original, candidate).

    The anomaly constraint passes only for scores strictly below the
    threshold; a candidate identical to the original trivially satisfies
    all distance constraints.
    """
    checks: list[ConstraintCheck] = []
    if constraints.max_perturbation_rate is not None:
        try:
            rate = perturbation_rate(tokenize(orig), tokenize(candidate))
            checks.append(ConstraintCheck(
                "perturbation_rate", rate, constraints.max_perturbation_rate,
                rate <= constraints.max_perturbation_rate,
            ))
        except AlignmentError as exc:
            checks.append(ConstraintCheck(
                "perturbation_rate", None, constraints.max_perturbation_rate,
                False, reason=str(exc),
            ))
    if constraints.max_levenshtein is not None:
        dist = levenshtein(orig, candidate)
        checks.append(ConstraintCheck(
            "levenshtein", float(dist), float(constraints.max_levenshtein),
            dist <= constraints.max_levenshtein,
        ))
    if constraints.min_similarity is not None:
        try:
            sim = constraints.similarity_fn(orig, candidate)
            checks.append(ConstraintCheck(
                "similarity", sim, constraints.min_similarity,
                sim >= constraints.min_similarity,
            ))
        except Exception as exc:  # a broken similarity handle fails the constraint, not the attack
            checks.append(ConstraintCheck(
                "similarity", None, constraints.min_similarity, False, reason=str(exc),
            ))
    if constraints.detector is not None:
        score = anomaly_score(constraints.detector, candidate)
        checks.append(ConstraintCheck(
            "anomaly_score", score, constraints.anomaly_threshold,
            score < constraints.anomaly_threshold,
        ))
    return ConstraintAudit(checks=tuple(checks))


@dataclass
class AttackOutcome:
    original: TextSample
    final: TextSample
    success: bool
    queries: int
    audit: ConstraintAudit
    original_pred: int
    final_pred: int
    substitutions: list[tuple[int, str, str]] = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "id": self.original.id,
            "original_text": self.original.text,
            "final_text": self.final.text,
            "success": self.success,
            "queries": self.queries,
            "original_pred": self.original_pred,
            "final_pred": self.final_pred,
            "substitutions": [list(s) for s in self.substitutions],
            "audit": self.audit.to_dict(),
        }


class _BudgetExhausted(Exception):
    pass


class _CountingVictim:
    def __init__(self, predict_fn: PredictFn, budget: int):
        self.predict_fn = predict_fn
        self.budget = budget
        self.queries = 0

    def __call__(self, text: str) -> ProbDist:
        if self.queries >= self.budget:
            raise _BudgetExhausted()
        self.queries += 1
        return self.predict_fn(text)


def _importance_with_base(predict_fn: PredictFn, text: str) -> tuple[list[int], ProbDist]:
    tok = tokenize(text)
    base = predict_fn(text)
    gold = int(np.argmax(base))
    scores: list[tuple[float, int]] = []
    for i in range(len(tok)):
        reduced = tok.without_token(i)
        drop = base[gold] - (predict_fn(reduced)[gold] if reduced else base[gold])
        scores.append((drop, i))
    scores.sort(key=lambda pair: (-pair[0], pair[1]))
    return [i for _, i in scores], base


def word_importance(victim, text: str) -> list[int]:
    """Token indices ranked by how much deleting each one drops the
    predicted-class probability; ties broken by ascending index."""
    ranking, _ = _importance_with_base(as_predict_fn(victim), text)
    return ranking


def _attackable(token: str) -> bool:
    return token[0].isalnum() and len(token) >= MIN_WORD_LEN and not token.isdigit()


def _mlm_candidates(endpoint, text, position, thesaurus, top_k) -> list[str]:
    tok = tokenize(text)
    word = tok.tokens[position]
    def fallback() -> list[str]:
        if thesaurus is None:
            return []
        return [s for s in synonyms(thesaurus, word, top_k) if s.isalnum()]

    if endpoint is None or not endpoint.supports("mlm"):
        if endpoint is None or endpoint.fallback == FALLBACK_RULE_BASED:
            return fallback()
        raise BackendError("mlm candidate source needs an 'mlm' endpoint or rule_based fallback")
    ws_index = _whitespace_token_index(text, tok.spans[position][0])
    try:
        ranked = remote_mlm(endpoint, text, [ws_index], top_k=top_k)[0]
    except BackendError:
        if endpoint.fallback == FALLBACK_RULE_BASED:
            return fallback()
        raise
    return [s for s in ranked if s.isalnum() and s.lower() != word.lower()]


def _finish(sample, counting, orig_pred, current_text, current_pred, constraints,
            substitutions, success) -> AttackOutcome:
    final = TextSample(
        id=f"{sample.id}#adv",
        text=current_text,
        label=sample.label,
        provenance=Provenance.ADVERSARIAL,
        source_id=sample.id,
    ) if current_text != sample.text else sample.replace()
    return AttackOutcome(
        original=sample,
        final=final,
        success=success,
        queries=counting.queries,
        audit=check_constraints(sample.text, current_text, constraints),
        original_pred=orig_pred,
        final_pred=current_pred,
        substitutions=substitutions,
    )


def _greedy_attack(
    victim,
    sample: TextSample,
    constraints: ConstraintSet,
    candidate_source: Callable[[str, int], list[str]],
    budget: int,
) -> AttackOutcome:
    counting = _CountingVictim(as_predict_fn(victim), budget)
    current_text = sample.text
    substitutions: list[tuple[int, str, str]] = []
    gold = 0
    try:
        ranking, base = _importance_with_base(counting, sample.text)
        gold = int(np.argmax(base))
        current_p = base[gold]
        current_pred = gold
        for pos in ranking:
            tok = tokenize(current_text)
            if pos >= len(tok) or not _attackable(tok.tokens[pos]):
                continue
            word = tok.tokens[pos]
            best: Optional[tuple[str, float, str]] = None
            for cand in candidate_source(current_text, pos):
                if cand.lower() == word.lower():
                    continue
                cand_text = tok.with_token(pos, _match_case(word, cand))
                if not check_constraints(sample.text, cand_text, constraints).passed:
                    continue
                probs = counting(cand_text)
                pred = int(np.argmax(probs))
                if pred != gold:
                    substitutions.append((pos, word, cand))
                    return _finish(sample, counting, gold, cand_text, pred,
                                   constraints, substitutions, success=True)
                if probs[gold] < (best[1] if best else current_p):
                    best = (cand_text, probs[gold], cand)
            if best is not None:
                current_text, current_p = best[0], best[1]
                substitutions.append((pos, word, best[2]))
        return _finish(sample, counting, gold, current_text, current_pred,
                       constraints, substitutions, success=False)
    except _BudgetExhausted:
        return _finish(sample, counting, gold, current_text, gold,
                       constraints, substitutions, success=False)


def greedy_word_attack(
    victim,
    sample: TextSample,
    constraints: ConstraintSet,
    source: str = "thesaurus",
    budget: int = 2000,
    thesaurus: Optional[Thesaurus] = None,
    endpoint: Optional[BackendEndpoint] = None,
    synonym_rank: int = 50,
) -> AttackOutcome:
    """Greedy importance-ordered word substitution until the victim flips.

    Candidates come from the ranked thesaurus or from masked-LM
    suggestions; every candidate is checked against the full constraint
    stack before it may spend a victim query. The search itself is
    deterministic: candidate lists are ranked and ties are broken by
    list order.
    """
    if source == "thesaurus":
        if thesaurus is None:
            raise ValueError("source='thesaurus' requires a thesaurus")
        def candidate_source(text: str, pos: int) -> list[str]:
            word = tokenize(text).tokens[pos]
            return [s for s in synonyms(thesaurus, word, synonym_rank) if s.isalnum()]
    elif source == "mlm":
        def candidate_source(text: str, pos: int) -> list[str]:
            return _mlm_candidates(endpoint, text, pos, thesaurus, top_k=min(synonym_rank, 10))
    else:
        raise ValueError(f"unknown candidate source {source!r}")
    return _greedy_attack(victim, sample, constraints, candidate_source, budget)


def char_attack(
    victim,
    sample: TextSample,
    constraints: ConstraintSet,
    budget: int = 2000,
    rng_seed: int = 0,
) -> AttackOutcome:
    """Greedy character-edit attack over important words.

    Each visited word offers one candidate per character operation, all
    within distance 2 of the word. An explicit `max_levenshtein` is
    enforced cumulatively against the original text; without one, the
    allowance is 2 per modified word, which a single interior edit per
    word can never exceed, so it is recorded in the audit rather than
    enforced mid-search.
    """
    def candidate_source(text: str, pos: int) -> list[str]:
        word = tokenize(text).tokens[pos]
        rng = np.random.default_rng(derive_seed(rng_seed, "char_attack", sample.id, pos))
        out: list[str] = []
        for op in _CHAR_OPS:
            cand = _apply_char_op(word, op, rng)
            if cand != word and cand not in out:
                out.append(cand)
        return out

    outcome = _greedy_attack(victim, sample, constraints, candidate_source, budget)
    if constraints.max_levenshtein is None:
        allowance = 2 * max(1, len({pos for pos, _, _ in outcome.substitutions}))
        outcome.audit = check_constraints(
            sample.text, outcome.final.text,
            replace(constraints, max_levenshtein=allowance),
        )
    return outcome


def attack_success_rate(outcomes: list[AttackOutcome]) -> float:
    """Fraction of outcomes that flipped the victim under all constraints."""
    if not outcomes:
        raise ValueError("attack_success_rate needs at least one outcome")
    return sum(1 for o in outcomes if o.success) / len(outcomes)


def run_attack_over(
    victim,
    data,
    constraints: ConstraintSet,
    kind: str = "word",
    source: str = "thesaurus",
    budget: int = 2000,
    thesaurus: Optional[Thesaurus] = None,
    endpoint: Optional[BackendEndpoint] = None,
    rng_seed: int = 0,
    only_correct: bool = True,
) -> list[AttackOutcome]:
    """Attack every sample; by default only those the victim already gets right."""
    predict_fn = as_predict_fn(victim)
    outcomes: list[AttackOutcome] = []
    for sample in data.samples:
        if only_correct and sample.label is not None:
            if int(np.argmax(predict_fn(sample.text))) != sample.label:
                continue
        if kind == "word":
            outcome = greedy_word_attack(
                victim, sample, constraints, source=source, budget=budget,
                thesaurus=thesaurus, endpoint=endpoint,
            )
        elif kind == "char":
            outcome = char_attack(
                victim, sample, constraints, budget=budget,
                rng_seed=derive_seed(rng_seed, "attack", sample.id),
            )
        else:
            raise ValueError(f"unknown attack kind {kind!r}")
        outcomes.append(outcome)
    return outcomes


def adversarial_pairs_dataset(outcomes: list[AttackOutcome], num_classes: int,
                              split: str = "train"):
    """Stage-2 training pairs: originals (0) plus successful adversarials (1)."""
    from .corpus import Dataset

    samples: list[TextSample] = []
    for o in outcomes:
        if not o.success:
            continue
        samples.append(o.original.replace(detector_label=0))
        samples.append(o.final.replace(detector_label=1))
    return Dataset(samples=samples, num_classes=num_classes, split=split)
