"""Linear SVM over pair features, trained by stochastic subgradient descent.

One-vs-rest binary classifiers share the feature standardization fitted on
train.  Training follows the projected stochastic-subgradient scheme for
the L2-regularized hinge objective (step 1/(lambda*t), optional projection
onto the 1/sqrt(lambda) ball); a bias enters as an appended constant
dimension.  Everything is seeded and single-threaded, so runs are
bit-reproducible.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import FAMILIES, FeatureDataset
from .labels import canonical_classes
from .metrics import evaluate

log = logging.getLogger(__name__)

_STD_FLOOR = 1e-8


@dataclass
class SvmModel:
    classes: list
    weights: np.ndarray  # (n_classes, n_features + 1), last column is bias
    mean: np.ndarray
    std: np.ndarray
    reg: float
    seed: int
    feature_names: tuple = None
    objective_history: dict = field(default_factory=dict)


def _standardize(matrix, mean, std):
    return (matrix - mean) / std


def _with_bias(matrix):
    return np.hstack([matrix, np.ones((matrix.shape[0], 1))])


def hinge_objective(w, x_signed, reg):
    """lambda/2 ||w||^2 + mean hinge loss; x_signed rows are y_i * x_i."""
    margins = x_signed @ w
    return 0.5 * reg * float(w @ w) + float(np.mean(np.maximum(0.0, 1.0 - margins)))


def _train_binary(x, y_signed, reg, epochs, seed, eta0=1.0):
    """Hinge-loss SGD with shrinkage, projection, and an epoch safeguard.

    The step decays as eta0 / (1 + eta0 * reg * t).  An epoch that worsens
    the regularized objective is rolled back (the step counter still
    advances, so retries run at smaller steps); the recorded objective
    history is therefore non-increasing.
    """
    rng = np.random.default_rng(seed)
    n = x.shape[0]
    w = np.zeros(x.shape[1])
    radius = 1.0 / np.sqrt(reg)
    x_signed = x * y_signed[:, None]
    best = hinge_objective(w, x_signed, reg)
    history = []
    t = 0
    for _ in range(epochs):
        checkpoint = w.copy()
        for i in rng.permutation(n):
            t += 1
            eta = eta0 / (1.0 + eta0 * reg * t)
            violating = y_signed[i] * (w @ x[i]) < 1.0
            w *= 1.0 - eta * reg
            if violating:
                w += eta * y_signed[i] * x[i]
            norm = np.linalg.norm(w)
            if norm > radius:
                w *= radius / norm
        objective = hinge_objective(w, x_signed, reg)
        if objective > best:
            w = checkpoint
            objective = best
        best = objective
        history.append(objective)
    return w, history


def train_linear_svm(features, labels, reg=1e-4, epochs=50, seed=0, feature_names=None):
    """Fit one-vs-rest linear classifiers over standardized features."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("features must be a 2-D matrix")
    if not np.all(np.isfinite(x)):
        raise ValueError("features must be finite")
    labels = list(labels)
    if len(labels) != x.shape[0]:
        raise ValueError("feature/label count mismatch")
    classes = canonical_classes(labels)
    if len(classes) < 2:
        raise ValueError(f"need at least 2 classes, got {classes}")

    mean = x.mean(axis=0)
    std = np.maximum(x.std(axis=0), _STD_FLOOR)
    xs = _with_bias(_standardize(x, mean, std))

    y = np.asarray([classes.index(l) for l in labels])
    weights = np.zeros((len(classes), xs.shape[1]))
    history = {}
    for ci, cls in enumerate(classes):
        y_signed = np.where(y == ci, 1.0, -1.0)
        weights[ci], history[cls] = _train_binary(xs, y_signed, reg, epochs, [seed, ci])
    return SvmModel(
        classes=classes,
        weights=weights,
        mean=mean,
        std=std,
        reg=reg,
        seed=seed,
        feature_names=tuple(feature_names) if feature_names else None,
        objective_history=history,
    )


def decision_scores(model, features):
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if x.shape[1] != model.mean.shape[0]:
        raise ValueError(
            f"feature dimension {x.shape[1]} != model dimension {model.mean.shape[0]}"
        )
    xs = _with_bias(_standardize(x, model.mean, model.std))
    return xs @ model.weights.T


def predict(model, features):
    """Argmax class; ties resolve to the earlier class in canonical order."""
    scores = decision_scores(model, features)
    picks = [model.classes[i] for i in np.argmax(scores, axis=1)]
    single = np.asarray(features).ndim == 1
    return picks[0] if single else picks


def feature_ablation(train, dev, reg=1e-4, epochs=50, seed=0):
    """Dev micro-F of an SVM per single feature family, best first."""
    results = {}
    for family in FAMILIES:
        cols = train.family_columns(family)
        if not cols:
            continue
        model = train_linear_svm(
            train.select(cols).matrix, train.labels, reg, epochs, seed, cols
        )
        preds = predict(model, dev.select(cols).matrix)
        results[family] = evaluate(preds, dev.labels).micro_f
    return dict(sorted(results.items(), key=lambda kv: -kv[1]))


def text_part_ablation(train, dev, parts=("title", "body", "answers"), reg=1e-4,
                       epochs=50, seed=0):
    """Micro metrics per text-part feature subset, plus the full union."""
    subsets = {part: train.part_columns(part) for part in parts}
    subsets["all"] = train.names
    table = {}
    for name, cols in subsets.items():
        model = train_linear_svm(
            train.select(cols).matrix, train.labels, reg, epochs, seed, cols
        )
        preds = predict(model, dev.select(cols).matrix)
        report = evaluate(preds, dev.labels)
        table[name] = {
            "micro_f": report.micro_f,
            "precision": report.precision,
            "recall": report.recall,
        }
    return table


def save_model(model, path):
    payload = {
        "version": 1,
        "classes": model.classes,
        "weights": model.weights.tolist(),
        "mean": model.mean.tolist(),
        "std": model.std.tolist(),
        "reg": model.reg,
        "seed": model.seed,
        "feature_names": list(model.feature_names) if model.feature_names else None,
        "objective_history": model.objective_history,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload), encoding="utf-8")


def load_model(path):
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return SvmModel(
        classes=payload["classes"],
        weights=np.asarray(payload["weights"], dtype=np.float64),
        mean=np.asarray(payload["mean"], dtype=np.float64),
        std=np.asarray(payload["std"], dtype=np.float64),
        reg=payload["reg"],
        seed=payload["seed"],
        feature_names=tuple(payload["feature_names"]) if payload["feature_names"] else None,
        objective_history=payload.get("objective_history", {}),
    )
