"""Micro-averaged evaluation, and the binary duplicate-detection view."""

import random
from dataclasses import dataclass

import numpy as np

from .graph import LabeledPair
from .labels import DUPLICATE, NON_DUPLICATE, canonical_classes


@dataclass
class MetricsReport:
    classes: list
    confusion: np.ndarray  # rows gold, columns predicted
    micro_f: float
    precision: float
    recall: float
    per_class_f: dict

    def to_dict(self):
        return {
            "classes": self.classes,
            "confusion": self.confusion.tolist(),
            "micro_f": self.micro_f,
            "precision": self.precision,
            "recall": self.recall,
            "per_class_f": self.per_class_f,
        }


def evaluate(predictions, gold):
    """Micro P/R/F plus per-class F from one-vs-rest confusion counts."""
    predictions = list(predictions)
    gold = list(gold)
    if len(predictions) != len(gold):
        raise ValueError(
            f"length mismatch: {len(predictions)} predictions, {len(gold)} gold"
        )
    classes = canonical_classes(gold + predictions)
    index = {c: i for i, c in enumerate(classes)}
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for pred, g in zip(predictions, gold):
        confusion[index[g], index[pred]] += 1

    tp = np.diag(confusion).astype(np.float64)
    fp = confusion.sum(axis=0) - tp
    fn = confusion.sum(axis=1) - tp

    tp_total, fp_total, fn_total = tp.sum(), fp.sum(), fn.sum()
    precision = tp_total / (tp_total + fp_total) if tp_total + fp_total else 0.0
    recall = tp_total / (tp_total + fn_total) if tp_total + fn_total else 0.0
    micro_f = (
        2 * precision * recall / (precision + recall) if precision + recall else 0.0
    )

    per_class_f = {}
    for i, cls in enumerate(classes):
        denom = 2 * tp[i] + fp[i] + fn[i]
        per_class_f[cls] = float(2 * tp[i] / denom) if denom else 0.0

    return MetricsReport(
        classes=classes,
        confusion=confusion,
        micro_f=float(micro_f),
        precision=float(precision),
        recall=float(recall),
        per_class_f=per_class_f,
    )


def reformulate_dqd(pairs, seed=0):
    """Binary duplicate-detection view of a four-class pair list.

    Duplicates are the positives; an equally sized seeded uniform sample of
    the pooled remaining classes forms the negatives.  Apply per split.
    """
    pairs = list(pairs)
    positives = [p for p in pairs if p.label == DUPLICATE]
    others = [p for p in pairs if p.label != DUPLICATE]
    if not positives:
        raise ValueError("no duplicate pairs; binary reformulation undefined")
    if len(others) < len(positives):
        raise ValueError(
            f"{len(others)} non-duplicates cannot balance {len(positives)} duplicates"
        )
    rng = random.Random(seed)
    sampled = rng.sample(sorted(others, key=lambda p: (p.ku1, p.ku2, p.label)),
                         len(positives))
    binary = [LabeledPair(p.ku1, p.ku2, DUPLICATE) for p in positives]
    binary.extend(LabeledPair(p.ku1, p.ku2, NON_DUPLICATE) for p in sampled)
    binary.sort(key=lambda p: (p.ku1, p.ku2))
    return binary
