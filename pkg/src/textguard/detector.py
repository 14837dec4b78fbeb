"""The anomaly detector: a binary scorer for non-natural text.

A logistic head over the shared hashed features, trained in two stages:
first on artificially perturbed twins of the training data, then on real
adversarial pairs, so it separates attack output from natural text.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .corpus import Dataset
from .features import FeatureSpec, extract
from .classifier import ModelFormatError, MODEL_MAGIC, TrainConfig, read_container
from .perturb import PerturbFamily, make_artificial_dataset

logger = logging.getLogger(__name__)

BCE_EPS = 1e-7


def default_detector_config(seed: int = 0, hash_dim: int = 1 << 18) -> TrainConfig:
    """Detector stages need a hotter schedule than the classifier:
    character-level artificial cues are too diffuse for lr 0.1 x 5 epochs."""
    return TrainConfig(hash_dim=hash_dim, learning_rate=1.0, epochs=20,
                       batch_size=16, seed=seed)


@dataclass
class DetectorModel:
    spec: FeatureSpec
    weights: np.ndarray            # (hash_dim,)
    bias: float
    threshold: float = 0.5
    trained_on: dict = field(default_factory=dict)
    stage2_empty: bool = False

    def score(self, text: str) -> float:
        return anomaly_score(self, text)


def anomaly_score(model: DetectorModel, text: str) -> float:
    """Probability that `text` is non-natural; logistic of the linear score."""
    indices, values = extract(model.spec, text)
    z = model.bias if len(indices) == 0 else float(values @ model.weights[indices]) + model.bias
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def is_anomalous(model: DetectorModel, text: str) -> bool:
    """Strictly above the threshold counts as anomalous; a boundary score is compliant."""
    return anomaly_score(model, text) > model.threshold


def bce_loss(y: int, y_hat: float) -> float:
    """Binary cross entropy with the prediction clamped to [eps, 1-eps]."""
    if y not in (0, 1):
        raise ValueError(f"y must be 0 or 1, got {y}")
    p = min(max(y_hat, BCE_EPS), 1.0 - BCE_EPS)
    return -y * math.log(p) - (1 - y) * math.log(1.0 - p)


def _detector_samples(data: Dataset) -> list:
    labeled = [s for s in data.samples if s.detector_label is not None]
    bad = [s.id for s in labeled if s.detector_label not in (0, 1)]
    if bad:
        raise ValueError(f"detector labels must be 0/1; offending ids: {bad[:5]}")
    return labeled


def _fit_stage(
    model: DetectorModel,
    data: Dataset,
    config: TrainConfig,
    stage_seed: int,
) -> None:
    """Mini-batch gradient descent on BCE loss, continuing from current weights."""
    samples = _detector_samples(data)
    feats = [extract(model.spec, s.text) for s in samples]
    labels = np.array([s.detector_label for s in samples], dtype=np.float64)
    rng = np.random.default_rng(stage_seed)
    n = len(samples)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            grad_b = 0.0
            batch_indices: list[np.ndarray] = []
            batch_grads: list[np.ndarray] = []
            for i in batch:
                indices, values = feats[i]
                z = model.bias if len(indices) == 0 else float(values @ model.weights[indices]) + model.bias
                p = 1.0 / (1.0 + math.exp(-z)) if z >= 0 else math.exp(z) / (1.0 + math.exp(z))
                err = p - labels[i]
                grad_b += err
                if len(indices):
                    batch_indices.append(indices)
                    batch_grads.append(values * err)
            scale = config.learning_rate / len(batch)
            model.bias -= scale * grad_b
            if batch_indices:
                np.add.at(
                    model.weights,
                    np.concatenate(batch_indices),
                    -scale * np.concatenate(batch_grads),
                )


def train_detector_staged(
    stage1: Dataset,
    stage2: Optional[Dataset],
    config: TrainConfig | None = None,
) -> DetectorModel:
    """Fit on the stage-1 set, then continue on the stage-2 set.

    Both sets carry detector labels (0 natural, 1 non-natural). An empty
    stage-2 set leaves the stage-1 weights untouched and flags the model.
    """
    config = config or default_detector_config()
    spec = FeatureSpec(hash_dim=config.hash_dim)
    model = DetectorModel(
        spec=spec,
        weights=np.zeros(config.hash_dim, dtype=np.float64),
        bias=0.0,
    )
    model.trained_on["stage1_samples"] = len(_detector_samples(stage1))
    _fit_stage(model, stage1, config, stage_seed=config.seed)
    if stage2 is None or not _detector_samples(stage2):
        logger.warning("stage-2 set is empty; returning the stage-1 detector")
        model.stage2_empty = True
        return model
    model.trained_on["stage2_pairs"] = len(_detector_samples(stage2))
    _fit_stage(model, stage2, config, stage_seed=config.seed + 1)
    return model


def train_two_stage(
    train: Dataset,
    family: PerturbFamily,
    adversarial_pairs: Optional[Dataset],
    config: TrainConfig | None = None,
    thesaurus=None,
    endpoint=None,
) -> DetectorModel:
    """Stage 1 fits on generated artificial pairs, stage 2 continues on real
    adversarial pairs produced by an attack against a victim on the train split.
    """
    config = config or default_detector_config()
    stage1, dropped = make_artificial_dataset(
        train, family, rng_seed=config.seed, thesaurus=thesaurus, endpoint=endpoint
    )
    model = train_detector_staged(stage1, adversarial_pairs, config)
    model.trained_on["stage1_family"] = family.kind
    model.trained_on["stage1_dropped"] = dropped
    return model


def train_stage2_only(
    model: DetectorModel, adversarial_pairs: Dataset, config: TrainConfig
) -> DetectorModel:
    """Continue training an existing detector on adversarial pairs."""
    _fit_stage(model, adversarial_pairs, config, stage_seed=config.seed + 1)
    model.stage2_empty = False
    return model


@dataclass(frozen=True)
class DetectorEvalReport:
    tp: int
    fp: int
    tn: int
    fn: int
    tpr: Optional[float]
    fpr: Optional[float]
    f1: Optional[float]

    def to_dict(self) -> dict:
        return {
            "tpr": self.tpr, "fpr": self.fpr, "f1": self.f1,
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
        }


def evaluate_detector(model: DetectorModel, labeled: Dataset) -> DetectorEvalReport:
    """Confusion counts at the model threshold; metrics undefined (None) when a
    class is absent or a denominator is zero."""
    samples = _detector_samples(labeled)
    if not samples:
        raise ValueError("evaluation set carries no detector labels")
    tp = fp = tn = fn = 0
    for s in samples:
        flagged = is_anomalous(model, s.text)
        if s.detector_label == 1:
            tp += flagged
            fn += not flagged
        else:
            fp += flagged
            tn += not flagged
    tpr = tp / (tp + fn) if (tp + fn) else None
    fpr = fp / (fp + tn) if (fp + tn) else None
    f1 = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else None
    return DetectorEvalReport(tp=tp, fp=fp, tn=tn, fn=fn, tpr=tpr, fpr=fpr, f1=f1)


def save_detector(model: DetectorModel, path: str | Path) -> None:
    import json

    header = {
        "kind": "detector",
        "feature_spec": model.spec.to_dict(),
        "num_classes": 2,
        "weights_shape": [int(model.weights.shape[0])],
        "dtype": "<f8",
        "threshold": model.threshold,
        "trained_on": model.trained_on,
        "stage2_empty": model.stage2_empty,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(len(header_bytes).to_bytes(4, "big"))
        fh.write(header_bytes)
        fh.write(model.weights.astype("<f8").tobytes())
        fh.write(np.array([model.bias], dtype="<f8").tobytes())


def load_detector(path: str | Path) -> DetectorModel:
    header, weights, bias = read_container(path)
    if header["kind"] != "detector":
        raise ModelFormatError(f"{path}: expected a detector model, got {header['kind']!r}")
    return DetectorModel(
        spec=FeatureSpec.from_dict(header["feature_spec"]),
        weights=weights,
        bias=float(bias[0]),
        threshold=header.get("threshold", 0.5),
        trained_on=header.get("trained_on", {}),
        stage2_empty=header.get("stage2_empty", False),
    )
