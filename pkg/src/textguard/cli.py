"""Command-line surface tying the toolkit together.

Every subcommand is a deterministic file-to-file pipeline stage: fixed
seeds reproduce byte-identical outputs, so runs diff cleanly in CI.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .attack import ConstraintSet, attack_success_rate, run_attack_over
from .augment import AugmentConfig, detector_guided_augment
from .backend import BackendEndpoint, FALLBACK_ERROR, FALLBACK_RULE_BASED
from .classifier import TrainConfig, load_model, save_model, train_classifier
from .corpus import Dataset, Provenance, TextSample, load_dataset, save_dataset
from .defense import DefenseConfig, defend_predict, evaluate_defense
from .detector import (
    evaluate_detector,
    load_detector,
    save_detector,
    train_detector_staged,
)
from .experiment import ExperimentConfig, run_experiment, write_report
from .lexicon import (
    load_default_morph_rules,
    load_default_thesaurus,
    load_morph_rules,
    load_thesaurus,
)
from .perturb import FAMILIES, PerturbFamily, make_artificial_dataset
from .rng import derive_seed
from .transform import TRANSFORM_IDS, TransformContext, transform_variants

_FAMILY_ALIASES = {"char": "char_ops", "syn": "thesaurus_sub", "mlm": "mlm_sub"}
_FALLBACK_ALIASES = {"rule": FALLBACK_RULE_BASED, "error": FALLBACK_ERROR}


def _endpoint_from_args(args) -> Optional[BackendEndpoint]:
    url = getattr(args, "endpoint", None) or os.environ.get("TEXTGUARD_BACKEND_URL")
    if not url:
        return None
    return BackendEndpoint(
        base_url=url,
        fallback=_FALLBACK_ALIASES[getattr(args, "fallback", "rule")],
    )


def _thesaurus_from_args(args):
    path = getattr(args, "thesaurus", None)
    return load_thesaurus(path) if path else load_default_thesaurus()


def _morph_from_args(args):
    path = getattr(args, "morph_rules", None)
    return load_morph_rules(path) if path else load_default_morph_rules()


def _train_config_from_args(args) -> TrainConfig:
    return TrainConfig(
        hash_dim=args.hash_dim,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
    )


def _add_train_flags(parser: argparse.ArgumentParser, learning_rate: float = 0.1,
                     epochs: int = 5) -> None:
    parser.add_argument("--hash-dim", type=int, default=1 << 18)
    parser.add_argument("--learning-rate", type=float, default=learning_rate)
    parser.add_argument("--epochs", type=int, default=epochs)
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--seed", type=int, default=0)


def _write_json(payload: dict, path: str) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_train_classifier(args) -> int:
    data = load_dataset(args.dataset, args.format)
    model = train_classifier(data, _train_config_from_args(args))
    save_model(model, args.out)
    print(f"trained on {len(data)} samples; final epoch loss "
          f"{model.loss_history[-1]:.4f}; wrote {args.out}")
    return 0


def cmd_gen_artificial(args) -> int:
    data = load_dataset(args.infile, args.format)
    family = PerturbFamily(kind=_FAMILY_ALIASES.get(args.family, args.family), rate=args.rate)
    thesaurus = _thesaurus_from_args(args) if family.kind != "char_ops" else None
    artificial, dropped = make_artificial_dataset(
        data, family, rng_seed=args.seed,
        thesaurus=thesaurus, endpoint=_endpoint_from_args(args),
    )
    save_dataset(artificial, args.out)
    print(f"wrote {len(artificial)} samples to {args.out} ({dropped} unmodifiable dropped)")
    return 0


def cmd_train_detector(args) -> int:
    stage1 = load_dataset(args.stage1, "jsonl")
    stage2 = load_dataset(args.stage2, "jsonl") if args.stage2 else None
    model = train_detector_staged(stage1, stage2, _train_config_from_args(args))
    save_detector(model, args.out)
    note = " (stage-2 empty)" if model.stage2_empty else ""
    print(f"wrote detector to {args.out}{note}")
    return 0


def cmd_eval_detector(args) -> int:
    model = load_detector(args.model)
    data = load_dataset(args.data, "jsonl")
    report = evaluate_detector(model, data)
    _write_json(report.to_dict(), args.report)
    print(json.dumps(report.to_dict(), sort_keys=True))
    return 0


def cmd_attack(args) -> int:
    victim = load_model(args.victim)
    detector = None
    if args.detector and args.detector != "none":
        detector = load_detector(args.detector)
    data = load_dataset(args.data, args.format, split="test")
    constraints = ConstraintSet(
        max_perturbation_rate=args.max_perturbation_rate,
        max_levenshtein=args.max_levenshtein,
        min_similarity=args.min_similarity,
        detector=detector,
    )
    outcomes = run_attack_over(
        victim, data, constraints,
        kind=args.kind, source=args.source, budget=args.budget,
        thesaurus=_thesaurus_from_args(args),
        endpoint=_endpoint_from_args(args),
        rng_seed=args.seed,
    )
    with Path(args.out).open("w", encoding="utf-8") as fh:
        for outcome in outcomes:
            fh.write(json.dumps(outcome.to_record(), sort_keys=True))
            fh.write("\n")
    rate = attack_success_rate(outcomes) if outcomes else float("nan")
    print(f"attacked {len(outcomes)} samples; success rate {rate:.3f}; wrote {args.out}")
    return 0


def cmd_transform(args) -> int:
    data = load_dataset(args.infile, args.format)
    context = TransformContext(
        thesaurus=_thesaurus_from_args(args),
        morph_rules=_morph_from_args(args),
        endpoint=_endpoint_from_args(args),
    )
    out_samples = []
    for sample in data.samples:
        report = transform_variants(
            sample.text, [args.fn], context,
            rng_seed=derive_seed(args.seed, "transform", sample.id),
        )[0]
        out_samples.append(
            TextSample(
                id=f"{sample.id}#tr-{args.fn}",
                text=report.output_text,
                label=sample.label,
                provenance=Provenance.TRANSFORMED,
                source_id=sample.id,
                meta={"fn": args.fn, "fallback_used": report.fallback_used},
            )
        )
    save_dataset(Dataset(out_samples, data.num_classes, data.split), args.out)
    print(f"wrote {len(out_samples)} transformed samples to {args.out}")
    return 0


def _defense_from_toml(path: str) -> tuple[DefenseConfig, dict]:
    import tomli

    with Path(path).open("rb") as fh:
        raw = tomli.load(fh)
    d = raw.get("defense", {})
    resources = raw.get("resources", {})
    backend = raw.get("backend", {})
    thesaurus = (
        load_thesaurus(resources["thesaurus"]) if resources.get("thesaurus")
        else load_default_thesaurus()
    )
    morph = (
        load_morph_rules(resources["morph_rules"]) if resources.get("morph_rules")
        else load_default_morph_rules()
    )
    endpoint = None
    if backend.get("url"):
        endpoint = BackendEndpoint(
            base_url=backend["url"],
            fallback=_FALLBACK_ALIASES[backend.get("fallback", "rule")],
        )
    config = DefenseConfig(
        detector=load_detector(d["detector"]),
        classifier=load_model(d["classifier"]),
        context=TransformContext(thesaurus=thesaurus, morph_rules=morph, endpoint=endpoint),
        transforms=tuple(d.get("transforms", TRANSFORM_IDS)),
        k=d.get("k", 3),
        base_seed=d.get("base_seed", 0),
    )
    return config, raw.get("attack", {})


def cmd_defend(args) -> int:
    config, attack_cfg = _defense_from_toml(args.config)
    data = load_dataset(args.data, args.format, split="test")
    labeled = [s for s in data.samples if s.label is not None]
    payload: dict = {"samples": len(data.samples)}
    routes = {"compliant": 0, "transformed": 0}
    correct = 0
    blocked = []
    for s in data.samples:
        probs, record = defend_predict(config, s.text)
        routes[record.route] += 1
        if record.route == "transformed":
            blocked.append(s.id)
        if s.label is not None and int(np.argmax(probs)) == s.label:
            correct += 1
    payload["routes"] = routes
    if labeled:
        payload["original_accuracy"] = correct / len(labeled)
    if args.report_blocks:
        payload["block_decisions"] = blocked
    if args.attack != "none":
        constraints = ConstraintSet(
            max_perturbation_rate=attack_cfg.get("max_perturbation_rate", 0.4),
        )
        metrics = evaluate_defense(
            config, data,
            attack_kind=args.attack,
            constraints=constraints,
            budget=attack_cfg.get("budget", 2000),
            rng_seed=attack_cfg.get("seed", 0),
        )
        payload["adversarial_accuracy"] = metrics["adversarial_accuracy"]
        payload["attack_successes"] = metrics["attack_successes"]
    _write_json(payload, args.out)
    print(json.dumps(payload, sort_keys=True))
    return 0


def cmd_augment(args) -> int:
    detector = load_detector(args.detector)
    data = load_dataset(args.infile, args.format)
    config = AugmentConfig(p=args.p, s=args.s, max_attempts=args.max_attempts, seed=args.seed)
    augmented = detector_guided_augment(data, detector, config, _thesaurus_from_args(args))
    save_dataset(augmented, args.out)
    exhausted = sum(1 for s in augmented.samples if s.meta.get("exhausted"))
    print(f"wrote {len(augmented)} samples to {args.out} ({exhausted} exhausted)")
    return 0


def cmd_run(args) -> int:
    config = ExperimentConfig.from_toml(args.config)
    report = run_experiment(config)
    write_report(report, args.out)
    print(f"wrote report for task {config.task!r} to {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config, _ = _defense_from_toml(args.config)
    uvicorn.run(create_app(config), host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_version(args) -> int:
    print(f"textguard {__version__}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="textguard",
        description="Anomaly-detection toolkit for adversarial NLP robustness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-classifier", help="train the built-in hashed n-gram classifier")
    p.add_argument("--dataset", required=True)
    p.add_argument("--format", choices=("jsonl", "tsv"), default="jsonl")
    p.add_argument("--out", required=True)
    _add_train_flags(p)
    p.set_defaults(handler=cmd_train_classifier)

    p = sub.add_parser("gen-artificial", help="generate stage-1 artificial samples")
    p.add_argument("--family", choices=tuple(_FAMILY_ALIASES) + FAMILIES, required=True)
    p.add_argument("--rate", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=("jsonl", "tsv"), default="jsonl")
    p.add_argument("--out", required=True)
    p.add_argument("--thesaurus")
    p.add_argument("--endpoint")
    p.add_argument("--fallback", choices=("rule", "error"), default="rule")
    p.set_defaults(handler=cmd_gen_artificial)

    p = sub.add_parser("train-detector", help="two-stage anomaly detector training")
    p.add_argument("--stage1", required=True, help="artificial dataset (detector labels)")
    p.add_argument("--stage2", default=None, help="adversarial pairs dataset")
    p.add_argument("--out", required=True)
    _add_train_flags(p, learning_rate=1.0, epochs=20)
    p.set_defaults(handler=cmd_train_detector)

    p = sub.add_parser("eval-detector", help="confusion metrics for a detector")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(handler=cmd_eval_detector)

    p = sub.add_parser("attack", help="run a constrained attack over a dataset")
    p.add_argument("--kind", choices=("word", "char"), default="word")
    p.add_argument("--source", choices=("thesaurus", "mlm"), default="thesaurus")
    p.add_argument("--victim", required=True)
    p.add_argument("--detector", default="none")
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=("jsonl", "tsv"), default="jsonl")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--budget", type=int, default=2000)
    p.add_argument("--max-perturbation-rate", type=float, default=0.4)
    p.add_argument("--max-levenshtein", type=int, default=None)
    p.add_argument("--min-similarity", type=float, default=None)
    p.add_argument("--thesaurus")
    p.add_argument("--endpoint")
    p.add_argument("--fallback", choices=("rule", "error"), default="rule")
    p.set_defaults(handler=cmd_attack)

    p = sub.add_parser("transform", help="apply one transformation function")
    p.add_argument("--fn", choices=TRANSFORM_IDS, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=("jsonl", "tsv"), default="jsonl")
    p.add_argument("--out", required=True)
    p.add_argument("--thesaurus")
    p.add_argument("--morph-rules")
    p.add_argument("--endpoint")
    p.add_argument("--fallback", choices=("rule", "error"), default="rule")
    p.set_defaults(handler=cmd_transform)

    p = sub.add_parser("defend", help="evaluate the defense framework")
    p.add_argument("--config", required=True, help="defense TOML config")
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=("jsonl", "tsv"), default="jsonl")
    p.add_argument("--attack", choices=("word", "char", "none"), default="none")
    p.add_argument("--out", required=True)
    p.add_argument("--report-blocks", action="store_true",
                   help="also list ids that detect-and-reject would block")
    p.set_defaults(handler=cmd_defend)

    p = sub.add_parser("augment", help="detector-guided data augmentation")
    p.add_argument("--detector", required=True)
    p.add_argument("--p", type=float, default=30.0)
    p.add_argument("--s", type=int, default=50)
    p.add_argument("--max-attempts", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=("jsonl", "tsv"), default="jsonl")
    p.add_argument("--out", required=True)
    p.add_argument("--thesaurus")
    p.set_defaults(handler=cmd_augment)

    p = sub.add_parser("run", help="run a seeded experiment from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser("serve", help="serve the defense over HTTP")
    p.add_argument("--config", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8100)
    p.set_defaults(handler=cmd_serve)

    p = sub.add_parser("version", help="print toolkit version")
    p.set_defaults(handler=cmd_version)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
