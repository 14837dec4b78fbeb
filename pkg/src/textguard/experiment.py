"""Experiment orchestration: seeded pipelines, metric reports, checksums.

A report is reproducible end to end: all randomness is derived from the
run seed, the config is echoed back, and every referenced file is
checksummed, so identical inputs give byte-identical reports.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .attack import (
    ConstraintSet,
    adversarial_pairs_dataset,
    attack_success_rate,
    run_attack_over,
)
from .augment import AugmentConfig, detector_guided_augment, unguided_augment
from .classifier import ClassifierModel, TrainConfig, predict, train_classifier
from .corpus import Dataset, load_dataset
from .defense import (
    DefenseConfig,
    augment_training_with_transforms,
    defense_accuracy,
    evaluate_defense,
)
from .detector import (
    DetectorModel,
    anomaly_score,
    default_detector_config,
    evaluate_detector,
    train_two_stage,
)
from .lexicon import (
    Thesaurus,
    load_default_morph_rules,
    load_default_thesaurus,
    load_morph_rules,
    load_thesaurus,
    default_morph_rules_path,
    default_thesaurus_path,
)
from .perturb import FAMILIES, PerturbFamily, make_artificial_dataset
from .rng import derive_seed
from .transform import TransformContext

TASKS = ("detector_eval", "attack_constraint", "defense_eval", "augment_compare")


class ExperimentError(RuntimeError):
    """An experiment stage failed; the message names the stage."""


def accuracy(preds: list[int], golds: list[int]) -> float:
    """Fraction of matching positions; lengths must agree and be non-empty."""
    if not preds or not golds:
        raise ValueError("accuracy needs non-empty prediction and gold lists")
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} predictions vs {len(golds)} golds")
    return sum(p == g for p, g in zip(preds, golds)) / len(preds)


def test_accuracy(model: ClassifierModel, data: Dataset) -> float:
    labeled = [s for s in data.samples if s.label is not None]
    preds = [int(np.argmax(predict(model, s.text))) for s in labeled]
    return accuracy(preds, [s.label for s in labeled])


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class ExperimentConfig:
    task: str
    train_path: str
    test_path: str
    seeds: list[int] = field(default_factory=lambda: [11, 23, 47])
    data_format: str = "jsonl"
    thesaurus_path: Optional[str] = None
    morph_rules_path: Optional[str] = None
    classifier: dict = field(default_factory=dict)
    detector: dict = field(default_factory=dict)
    attack: dict = field(default_factory=dict)
    defense: dict = field(default_factory=dict)
    augment: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        for path in (self.train_path, self.test_path):
            if not Path(path).exists():
                raise ValueError(f"dataset path does not exist: {path}")

    @classmethod
    def from_toml(cls, path: str | Path) -> "ExperimentConfig":
        import tomli

        with Path(path).open("rb") as fh:
            raw = tomli.load(fh)
        data = raw.get("data", {})
        resources = raw.get("resources", {})
        return cls(
            task=raw["task"],
            train_path=data["train"],
            test_path=data["test"],
            data_format=data.get("format", "jsonl"),
            seeds=list(raw.get("seeds", [11, 23, 47])),
            thesaurus_path=resources.get("thesaurus"),
            morph_rules_path=resources.get("morph_rules"),
            classifier=raw.get("classifier", {}),
            detector=raw.get("detector", {}),
            attack=raw.get("attack", {}),
            defense=raw.get("defense", {}),
            augment=raw.get("augment", {}),
        )


@dataclass
class Resources:
    thesaurus: Thesaurus
    morph_rules: object
    context: TransformContext


def _load_resources(config: ExperimentConfig) -> Resources:
    thesaurus = (
        load_thesaurus(config.thesaurus_path)
        if config.thesaurus_path
        else load_default_thesaurus()
    )
    morph = (
        load_morph_rules(config.morph_rules_path)
        if config.morph_rules_path
        else load_default_morph_rules()
    )
    return Resources(
        thesaurus=thesaurus,
        morph_rules=morph,
        context=TransformContext(thesaurus=thesaurus, morph_rules=morph),
    )


def _train_config(config: ExperimentConfig, seed: int) -> TrainConfig:
    c = config.classifier
    return TrainConfig(
        hash_dim=c.get("hash_dim", 1 << 18),
        learning_rate=c.get("learning_rate", 0.1),
        epochs=c.get("epochs", 5),
        batch_size=c.get("batch_size", 16),
        seed=seed,
    )


def _detector_train_config(config: ExperimentConfig, seed: int) -> TrainConfig:
    d = config.detector
    base = default_detector_config(seed=seed, hash_dim=config.classifier.get("hash_dim", 1 << 18))
    return TrainConfig(
        hash_dim=base.hash_dim,
        learning_rate=d.get("learning_rate", base.learning_rate),
        epochs=d.get("epochs", base.epochs),
        batch_size=d.get("batch_size", base.batch_size),
        seed=seed,
    )


def _family(config: ExperimentConfig) -> PerturbFamily:
    kind = config.detector.get("family", "thesaurus_sub")
    if kind not in FAMILIES:
        raise ExperimentError(f"detector stage: unknown family {kind!r}")
    return PerturbFamily(kind=kind, rate=config.detector.get("rate"))


def _attack_constraints(config: ExperimentConfig, detector: Optional[DetectorModel]) -> ConstraintSet:
    a = config.attack
    return ConstraintSet(
        max_perturbation_rate=a.get("max_perturbation_rate", 0.4),
        max_levenshtein=a.get("max_levenshtein"),
        min_similarity=a.get("min_similarity"),
        detector=detector,
    )


def _subset(data: Dataset, n: Optional[int], seed: int) -> Dataset:
    if n is None or n >= len(data.samples):
        return data
    rng = np.random.default_rng(derive_seed(seed, "subset", data.split))
    picks = sorted(rng.choice(len(data.samples), size=n, replace=False))
    return Dataset(
        samples=[data.samples[int(i)] for i in picks],
        num_classes=data.num_classes,
        split=data.split,
    )


def _build_detector(
    config: ExperimentConfig,
    train: Dataset,
    victim: ClassifierModel,
    res: Resources,
    seed: int,
) -> DetectorModel:
    family = _family(config)
    stage2_n = config.detector.get("stage2_samples", 200)
    subset = _subset(train, stage2_n, derive_seed(seed, "stage2"))
    kind = "char" if family.kind == "char_ops" else "word"
    outcomes = run_attack_over(
        victim,
        subset,
        ConstraintSet(max_perturbation_rate=config.attack.get("max_perturbation_rate", 0.4)),
        kind=kind,
        source="thesaurus",
        budget=config.attack.get("budget", 2000),
        thesaurus=res.thesaurus,
        rng_seed=derive_seed(seed, "stage2-attack"),
    )
    pairs = adversarial_pairs_dataset(outcomes, num_classes=train.num_classes)
    return train_two_stage(
        train,
        family,
        pairs,
        config=_detector_train_config(config, derive_seed(seed, "detector") % (2 ** 31)),
        thesaurus=res.thesaurus,
    )


def _detector_eval_run(config: ExperimentConfig, seed: int, train: Dataset,
                       test: Dataset, res: Resources) -> dict:
    victim = train_classifier(train, _train_config(config, seed))
    detector = _build_detector(config, train, victim, res, seed)
    family = _family(config)
    eval_set, _ = make_artificial_dataset(
        test, family, rng_seed=derive_seed(seed, "heldout"), thesaurus=res.thesaurus
    )
    report = evaluate_detector(detector, eval_set)
    return {"victim_test_accuracy": test_accuracy(victim, test), **report.to_dict()}


def _attack_constraint_run(config: ExperimentConfig, seed: int, train: Dataset,
                           test: Dataset, res: Resources) -> dict:
    victim = train_classifier(train, _train_config(config, seed))
    detector = _build_detector(config, train, victim, res, seed)
    family = _family(config)
    heldout, _ = make_artificial_dataset(
        test, family, rng_seed=derive_seed(seed, "heldout"), thesaurus=res.thesaurus
    )
    det_report = evaluate_detector(detector, heldout)

    subset = _subset(test, config.attack.get("samples", 200), derive_seed(seed, "attack-set"))
    kind = config.attack.get("kind", "word")
    common = dict(
        kind=kind,
        source=config.attack.get("source", "thesaurus"),
        budget=config.attack.get("budget", 2000),
        thesaurus=res.thesaurus,
        rng_seed=derive_seed(seed, "attack"),
    )
    unconstrained = run_attack_over(victim, subset, _attack_constraints(config, None), **common)
    constrained = run_attack_over(victim, subset, _attack_constraints(config, detector), **common)
    scores = [
        anomaly_score(detector, o.final.text) for o in constrained if o.success
    ]
    return {
        "detector_f1": det_report.f1,
        "detector_fpr": det_report.fpr,
        "attacked": len(unconstrained),
        "success_rate_unconstrained": attack_success_rate(unconstrained) if unconstrained else None,
        "success_rate_constrained": attack_success_rate(constrained) if constrained else None,
        "constrained_max_score": max(scores) if scores else None,
    }


def _defense_eval_run(config: ExperimentConfig, seed: int, train: Dataset,
                      test: Dataset, res: Resources) -> dict:
    augmented, _ = augment_training_with_transforms(
        train, res.context, rng_seed=derive_seed(seed, "train-aug")
    )
    victim = train_classifier(augmented, _train_config(config, seed))
    detector = _build_detector(config, train, victim, res, seed)
    defense = DefenseConfig(
        detector=detector,
        classifier=victim,
        context=res.context,
        k=config.defense.get("k", 3),
        base_seed=derive_seed(seed, "defense"),
        draws_per_query=config.defense.get("draws_per_query", 3),
    )
    subset = _subset(test, config.attack.get("samples", 100), derive_seed(seed, "attack-set"))
    constraints = _attack_constraints(config, None)
    defense_metrics = evaluate_defense(
        defense, subset,
        attack_kind=config.attack.get("kind", "word"),
        constraints=constraints,
        budget=config.attack.get("budget", 2000),
        rng_seed=derive_seed(seed, "adaptive"),
    )
    plain_outcomes = run_attack_over(
        victim, subset, constraints,
        kind=config.attack.get("kind", "word"),
        source=config.attack.get("source", "thesaurus"),
        budget=config.attack.get("budget", 2000),
        thesaurus=res.thesaurus,
        rng_seed=derive_seed(seed, "adaptive"),
    )
    labeled = [s for s in subset.samples if s.label is not None]
    plain_correct = sum(
        int(np.argmax(predict(victim, s.text))) == s.label for s in labeled
    )
    plain_survived = sum(1 for o in plain_outcomes if not o.success)
    return {
        "original_accuracy_defense": defense_metrics["original_accuracy"],
        "original_accuracy_plain": plain_correct / len(labeled),
        "adversarial_accuracy_defense": defense_metrics["adversarial_accuracy"],
        "adversarial_accuracy_plain": plain_survived / len(labeled),
        "defense_original_accuracy_full": defense_accuracy(defense, test),
        "plain_test_accuracy_full": test_accuracy(victim, test),
    }


def _augment_compare_run(config: ExperimentConfig, seed: int, train: Dataset,
                         test: Dataset, res: Resources) -> dict:
    victim = train_classifier(train, _train_config(config, seed))
    detector = _build_detector(config, train, victim, res, seed)
    aug_config = AugmentConfig(
        p=config.augment.get("p", 30),
        s=config.augment.get("s", 50),
        max_attempts=config.augment.get("max_attempts", 25),
        seed=derive_seed(seed, "augment") % (2 ** 31),
    )
    selected = detector_guided_augment(train, detector, aug_config, res.thesaurus)
    unselected = unguided_augment(train, aug_config, res.thesaurus)
    model_selected = train_classifier(selected, _train_config(config, seed))
    model_unselected = train_classifier(unselected, _train_config(config, seed))
    return {
        "accuracy_no_augmentation": test_accuracy(victim, test),
        "accuracy_unselected": test_accuracy(model_unselected, test),
        "accuracy_selected": test_accuracy(model_selected, test),
    }


_RUNNERS = {
    "detector_eval": _detector_eval_run,
    "attack_constraint": _attack_constraint_run,
    "defense_eval": _defense_eval_run,
    "augment_compare": _augment_compare_run,
}


def _mean_metrics(runs: list[dict]) -> dict:
    keys = runs[0].keys()
    out = {}
    for key in keys:
        values = [r[key] for r in runs]
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
            out[key] = sum(values) / len(values)
        else:
            out[key] = None
    return out


def run_experiment(config: ExperimentConfig) -> dict:
    """Execute the configured task once per seed and assemble the report."""
    res = _load_resources(config)
    train = load_dataset(config.train_path, config.data_format, split="train")
    test = load_dataset(config.test_path, config.data_format, split="test")
    runner = _RUNNERS[config.task]
    runs = []
    for seed in config.seeds:
        try:
            metrics = runner(config, seed, train, test, res)
        except Exception as exc:
            raise ExperimentError(f"task {config.task!r} failed at seed {seed}: {exc}") from exc
        runs.append({"seed": seed, "metrics": metrics})
    checksums = {
        "train": sha256_file(config.train_path),
        "test": sha256_file(config.test_path),
        "thesaurus": sha256_file(config.thesaurus_path or default_thesaurus_path()),
        "morph_rules": sha256_file(config.morph_rules_path or default_morph_rules_path()),
    }
    return {
        "task": config.task,
        "toolkit_version": __version__,
        "config": {
            "train": config.train_path,
            "test": config.test_path,
            "seeds": config.seeds,
            "classifier": config.classifier,
            "detector": config.detector,
            "attack": config.attack,
            "defense": config.defense,
            "augment": config.augment,
        },
        "checksums": checksums,
        "runs": runs,
        "mean": _mean_metrics([r["metrics"] for r in runs]),
    }


def write_report(report: dict, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
