"""Relatedness class labels and their canonical ordering."""

DUPLICATE = "duplicate"
DIRECT = "direct"
INDIRECT = "indirect"
ISOLATED = "isolated"
NON_DUPLICATE = "non-duplicate"

CLASSES = (DUPLICATE, DIRECT, INDIRECT, ISOLATED)

_RANK = {label: i for i, label in enumerate(CLASSES)}


def class_rank(label):
    """Sort key: duplicate > direct > indirect > isolated, unknown labels last."""
    return (_RANK.get(label, len(CLASSES)), label)


def canonical_classes(labels):
    """Distinct labels in canonical order (relatedness rank, then alphabetic)."""
    return sorted(set(labels), key=class_rank)
