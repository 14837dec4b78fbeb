"""Detect-and-transform defense framework.

Inputs the detector accepts as compliant pass straight to the
classifier, untouched. Detected-anomalous inputs are rewritten by k
randomly chosen transforms and the classifier's outputs over the k
variants are averaged. Training-time transform augmentation keeps the
classifier stable on transformed compliant text.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .attack import ConstraintSet, run_attack_over
from .backend import BackendEndpoint, remote_predict
from .classifier import ClassifierModel, ProbDist, predict
from .corpus import Dataset, Provenance, TextSample
from .detector import DetectorModel, anomaly_score
from .rng import derive_seed
from .transform import TRANSFORM_IDS, TransformContext, sample_transforms, transform_variants

logger = logging.getLogger(__name__)

ROUTE_COMPLIANT = "compliant"
ROUTE_TRANSFORMED = "transformed"


@dataclass
class DefenseConfig:
    detector: DetectorModel
    classifier: Union[ClassifierModel, BackendEndpoint]
    context: TransformContext
    transforms: tuple[str, ...] = TRANSFORM_IDS
    k: int = 3
    base_seed: int = 0
    draws_per_query: int = 1

    def __post_init__(self):
        unknown = set(self.transforms) - set(TRANSFORM_IDS)
        if unknown:
            raise ValueError(f"unknown transforms: {sorted(unknown)}")
        if not 1 <= self.k <= len(self.transforms):
            raise ValueError(f"k={self.k} must be within [1, {len(self.transforms)}]")
        if self.draws_per_query < 1:
            raise ValueError("draws_per_query must be >= 1")

    def classify(self, text: str) -> ProbDist:
        if isinstance(self.classifier, ClassifierModel):
            return predict(self.classifier, text)
        return remote_predict(self.classifier, [text])[0]


@dataclass(frozen=True)
class RouteRecord:
    route: str
    score: float
    transform_ids: tuple[str, ...] = ()
    variant_texts: tuple[str, ...] = ()
    variant_probs: tuple[tuple[float, ...], ...] = ()
    fallbacks: tuple[bool, ...] = ()

    def to_dict(self) -> dict:
        return {
            "route": self.route,
            "score": self.score,
            "transforms": list(self.transform_ids),
            "variant_texts": list(self.variant_texts),
            "variant_probs": [list(p) for p in self.variant_probs],
            "fallbacks": list(self.fallbacks),
        }


def average_dists(dists: list[ProbDist]) -> ProbDist:
    """Arithmetic mean of normalized distributions, kept in plain floats."""
    if not dists:
        raise ValueError("nothing to average")
    width = len(dists[0])
    if any(len(d) != width for d in dists):
        raise ValueError("distributions disagree on class count")
    return [sum(d[i] for d in dists) / len(dists) for i in range(width)]


def defend_predict(
    config: DefenseConfig,
    text: str,
    rng_seed: Optional[int] = None,
) -> tuple[ProbDist, RouteRecord]:
    """Route one input through the defense.

    Compliant inputs (score <= threshold) return the classifier's output
    bit-identically. Anomalous inputs get k distinct transforms drawn by
    a seed derived from (base_seed, text), so the whole function is pure.
    """
    score = anomaly_score(config.detector, text)
    if score <= config.detector.threshold:
        return config.classify(text), RouteRecord(route=ROUTE_COMPLIANT, score=score)
    seed = rng_seed if rng_seed is not None else derive_seed(config.base_seed, "defense", text)
    all_ids: list[str] = []
    all_reports = []
    for draw in range(config.draws_per_query):
        draw_seed = derive_seed(seed, "draw", draw)
        if tuple(config.transforms) == TRANSFORM_IDS:
            ids = sample_transforms(draw_seed, config.k)
        else:
            pool = list(config.transforms)
            rng = np.random.default_rng(draw_seed)
            picks = rng.choice(len(pool), size=config.k, replace=False)
            ids = [pool[int(i)] for i in picks]
        # stable reduction order: sort each draw's variants by transform id
        ids = sorted(ids)
        reports = transform_variants(text, ids, config.context,
                                     rng_seed=derive_seed(seed, "variant", draw))
        all_ids.extend(ids)
        all_reports.extend(reports)
    dists = [config.classify(r.output_text) for r in all_reports]
    mean = average_dists(dists)
    record = RouteRecord(
        route=ROUTE_TRANSFORMED,
        score=score,
        transform_ids=tuple(all_ids),
        variant_texts=tuple(r.output_text for r in all_reports),
        variant_probs=tuple(tuple(d) for d in dists),
        fallbacks=tuple(r.fallback_used for r in all_reports),
    )
    return mean, record


def defense_predict_fn(config: DefenseConfig):
    """The defense as a plain prediction function, e.g. as an attack victim."""
    def predict_fn(text: str) -> ProbDist:
        probs, _ = defend_predict(config, text)
        return probs
    return predict_fn


def augment_training_with_transforms(
    train: Dataset,
    context: TransformContext,
    rng_seed: int,
    transforms: tuple[str, ...] = TRANSFORM_IDS,
) -> tuple[Dataset, int]:
    """Each original plus one variant per transform, labels copied.

    Variants that fail or come back identical to their source are
    skipped; the count of skipped variants is returned.
    """
    out: list[TextSample] = []
    skipped = 0
    for sample in train.samples:
        out.append(sample)
        for fn_id in transforms:
            seed = derive_seed(rng_seed, "train_aug", sample.id, fn_id)
            try:
                report = transform_variants(sample.text, [fn_id], context, rng_seed=seed)[0]
            except Exception as exc:
                logger.warning("transform %s failed on %s: %s", fn_id, sample.id, exc)
                skipped += 1
                continue
            if report.output_text == sample.text:
                skipped += 1
                continue
            out.append(
                TextSample(
                    id=f"{sample.id}#tr-{fn_id}",
                    text=report.output_text,
                    label=sample.label,
                    provenance=Provenance.TRANSFORMED,
                    source_id=sample.id,
                )
            )
    return Dataset(samples=out, num_classes=train.num_classes, split=train.split), skipped


def defense_accuracy(config: DefenseConfig, data: Dataset) -> float:
    labeled = [s for s in data.samples if s.label is not None]
    correct = 0
    for s in labeled:
        probs, _ = defend_predict(config, s.text)
        correct += int(np.argmax(probs)) == s.label
    return correct / len(labeled)


def evaluate_defense(
    config: DefenseConfig,
    test: Dataset,
    attack_kind: str = "word",
    constraints: Optional[ConstraintSet] = None,
    budget: int = 2000,
    thesaurus=None,
    rng_seed: int = 0,
) -> dict:
    """Original accuracy plus accuracy after an adaptive attack.

    The attack harness targets `defend_predict` itself, so the attacker
    sees exactly what a deployed caller would see.
    """
    constraints = constraints or ConstraintSet(max_perturbation_rate=0.4)
    victim_fn = defense_predict_fn(config)
    labeled = [s for s in test.samples if s.label is not None]
    if not labeled:
        raise ValueError("evaluate_defense needs labeled test samples")
    original_correct = sum(
        int(np.argmax(victim_fn(s.text))) == s.label for s in labeled
    )
    outcomes = run_attack_over(
        victim_fn,
        Dataset(samples=labeled, num_classes=test.num_classes, split=test.split),
        constraints,
        kind=attack_kind,
        thesaurus=thesaurus if thesaurus is not None else config.context.thesaurus,
        budget=budget,
        rng_seed=rng_seed,
        only_correct=True,
    )
    survived = sum(1 for o in outcomes if not o.success)
    return {
        "original_accuracy": original_correct / len(labeled),
        "adversarial_accuracy": survived / len(labeled),
        "attacked": len(outcomes),
        "attack_successes": sum(1 for o in outcomes if o.success),
    }
