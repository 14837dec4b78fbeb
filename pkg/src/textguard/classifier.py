"""The victim/serving text classifier: a trainable hashed n-gram softmax model.

Stands behind the same prediction interface as a remote model backend,
so attacks and the defense framework never care which one they query.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .corpus import Dataset
from .features import FeatureSpec, extract

logger = logging.getLogger(__name__)

ProbDist = list[float]

MODEL_MAGIC = b"TXGDMDL1"


class ModelFormatError(ValueError):
    """Raised when a model file does not match the container format."""


def check_prob_dist(probs: list[float], tol: float = 1e-6) -> None:
    if any(p < 0.0 or p > 1.0 for p in probs):
        raise ValueError(f"probabilities outside [0,1]: {probs}")
    total = sum(probs)
    if abs(total - 1.0) > tol:
        raise ValueError(f"probabilities sum to {total}, expected 1 within {tol}")


@dataclass
class TrainConfig:
    hash_dim: int = 1 << 18
    learning_rate: float = 0.1
    epochs: int = 5
    batch_size: int = 16
    seed: int = 0


@dataclass
class ClassifierModel:
    spec: FeatureSpec
    weights: np.ndarray        # (hash_dim, num_classes)
    bias: np.ndarray           # (num_classes,)
    num_classes: int
    loss_history: list[float] = field(default_factory=list)

    def predict(self, text: str) -> ProbDist:
        return predict(self, text)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def _logits(model: ClassifierModel, indices: np.ndarray, values: np.ndarray) -> np.ndarray:
    if len(indices) == 0:
        return model.bias.copy()
    return values @ model.weights[indices] + model.bias


def predict(model: ClassifierModel, text: str) -> ProbDist:
    """Softmax over linear scores of the hashed features; pure in (model, text)."""
    indices, values = extract(model.spec, text)
    probs = _softmax(_logits(model, indices, values))
    return [float(p) for p in probs]


def train_classifier(train: Dataset, config: TrainConfig | None = None) -> ClassifierModel:
    """Mini-batch gradient descent on softmax cross-entropy.

    Deterministic for a fixed seed: example order is shuffled with a
    seeded generator and all arithmetic is float64.
    """
    config = config or TrainConfig()
    labeled = [s for s in train.samples if s.label is not None]
    classes = sorted({s.label for s in labeled})
    if len(classes) < 2:
        raise ValueError(f"training needs >= 2 classes with samples, got {classes}")
    num_classes = train.num_classes

    spec = FeatureSpec(hash_dim=config.hash_dim)
    model = ClassifierModel(
        spec=spec,
        weights=np.zeros((config.hash_dim, num_classes), dtype=np.float64),
        bias=np.zeros(num_classes, dtype=np.float64),
        num_classes=num_classes,
    )

    feats = [extract(spec, s.text) for s in labeled]
    labels = np.array([s.label for s in labeled], dtype=np.int64)
    rng = np.random.default_rng(config.seed)
    n = len(labeled)

    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            grad_b = np.zeros(num_classes, dtype=np.float64)
            batch_indices: list[np.ndarray] = []
            batch_rows: list[np.ndarray] = []
            for i in batch:
                indices, values = feats[i]
                probs = _softmax(_logits(model, indices, values))
                epoch_loss += -np.log(max(probs[labels[i]], 1e-12))
                err = probs.copy()
                err[labels[i]] -= 1.0
                grad_b += err
                if len(indices):
                    batch_indices.append(indices)
                    batch_rows.append(np.outer(values, err))
            scale = config.learning_rate / len(batch)
            model.bias -= scale * grad_b
            if batch_indices:
                np.add.at(
                    model.weights,
                    np.concatenate(batch_indices),
                    -scale * np.vstack(batch_rows),
                )
        model.loss_history.append(epoch_loss / n)
        logger.debug("epoch %d: mean training loss %.6f", epoch, epoch_loss / n)
    return model


def training_accuracy(model: ClassifierModel, data: Dataset) -> float:
    labeled = [s for s in data.samples if s.label is not None]
    correct = sum(
        1 for s in labeled if int(np.argmax(predict(model, s.text))) == s.label
    )
    return correct / len(labeled)


def save_model(model: ClassifierModel, path: str | Path, kind: str = "classifier",
               extra_header: Optional[dict] = None) -> None:
    """Write the versioned binary container: magic, header block, weight block."""
    header = {
        "kind": kind,
        "feature_spec": model.spec.to_dict(),
        "num_classes": model.num_classes,
        "weights_shape": list(model.weights.shape),
        "dtype": "<f8",
    }
    if extra_header:
        header.update(extra_header)
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(len(header_bytes).to_bytes(4, "big"))
        fh.write(header_bytes)
        fh.write(model.weights.astype("<f8").tobytes())
        fh.write(model.bias.astype("<f8").tobytes())


def read_container(path: str | Path) -> tuple[dict, np.ndarray, np.ndarray]:
    with Path(path).open("rb") as fh:
        magic = fh.read(8)
        if magic != MODEL_MAGIC:
            raise ModelFormatError(f"{path}: bad magic {magic!r}")
        header_len = int.from_bytes(fh.read(4), "big")
        try:
            header = json.loads(fh.read(header_len).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ModelFormatError(f"{path}: truncated or corrupt header") from exc
        shape = tuple(header["weights_shape"])
        want = int(np.prod(shape))
        raw = fh.read(want * 8)
        if len(raw) != want * 8:
            raise ModelFormatError(f"{path}: truncated weight block")
        weights = np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)
        bias_len = shape[-1] if len(shape) > 1 else 1
        raw = fh.read(bias_len * 8)
        if len(raw) != bias_len * 8:
            raise ModelFormatError(f"{path}: truncated bias block")
        bias = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    return header, weights, bias


def load_model(path: str | Path) -> ClassifierModel:
    header, weights, bias = read_container(path)
    if header["kind"] != "classifier":
        raise ModelFormatError(f"{path}: expected a classifier model, got {header['kind']!r}")
    return ClassifierModel(
        spec=FeatureSpec.from_dict(header["feature_spec"]),
        weights=weights,
        bias=bias,
        num_classes=header["num_classes"],
    )
