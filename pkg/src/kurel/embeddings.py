"""Corpus-specific word vectors and term relation matrices.

Skip-gram with negative sampling is implemented directly (numpy, single
worker, seeded) so that training is bit-reproducible.  Relation matrices
hold sparse symmetric term-to-term relatedness weights in [0, 1] with an
implicit unit diagonal, built either from vector cosines or from
normalized edit distance.
"""

import json
import logging
import struct
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .util import sha256_text

log = logging.getLogger(__name__)


@dataclass
class EmbeddingTable:
    vocabulary: list
    vectors: np.ndarray  # (len(vocabulary), dim), float64

    def __post_init__(self):
        if len(self.vocabulary) != self.vectors.shape[0]:
            raise ValueError("vocabulary/vector row count mismatch")
        if len(set(self.vocabulary)) != len(self.vocabulary):
            raise ValueError("vocabulary terms must be unique")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("vectors must be finite")
        self._index = {t: i for i, t in enumerate(self.vocabulary)}

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __contains__(self, term):
        return term in self._index

    def get(self, term):
        i = self._index.get(term)
        return None if i is None else self.vectors[i]


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def train_skipgram(
    corpus,
    dim=200,
    min_count=20,
    window=5,
    negatives=5,
    epochs=5,
    seed=0,
    lr=0.025,
    min_lr=1e-4,
):
    """Train skip-gram word vectors with negative sampling.

    ``corpus`` is a sequence of token lists.  Training is sequential and
    seeded: the same corpus and seed give a bit-identical table.  Negative
    samples follow the unigram^0.75 distribution; the learning rate decays
    linearly per center-word visit.
    """
    corpus = list(corpus)
    freq = Counter(t for sentence in corpus for t in sentence)
    vocab = sorted((t for t, c in freq.items() if c >= min_count),
                   key=lambda t: (-freq[t], t))
    if not vocab:
        raise ValueError(f"no terms survive min_count={min_count}")
    index = {t: i for i, t in enumerate(vocab)}

    sentences = []
    for sentence in corpus:
        ids = [index[t] for t in sentence if t in index]
        if len(ids) > 1:
            sentences.append(np.asarray(ids, dtype=np.int64))

    counts = np.array([freq[t] for t in vocab], dtype=np.float64)
    noise = counts ** 0.75
    noise_cdf = np.cumsum(noise / noise.sum())

    rng = np.random.default_rng(seed)
    vec_in = (rng.random((len(vocab), dim)) - 0.5) / dim
    vec_out = np.zeros((len(vocab), dim))

    total = max(1, sum(len(s) for s in sentences) * epochs)
    visit = 0
    for _ in range(epochs):
        for ids in sentences:
            for pos, center in enumerate(ids):
                visit += 1
                step = max(min_lr, lr * (1.0 - visit / total))
                reach = int(rng.integers(1, window + 1))
                context = np.concatenate(
                    [ids[max(0, pos - reach):pos], ids[pos + 1:pos + 1 + reach]]
                )
                if context.size == 0:
                    continue
                neg = np.searchsorted(
                    noise_cdf, rng.random(context.size * negatives)
                )
                outs = np.concatenate([context, neg])
                labels = np.zeros(outs.size)
                labels[:context.size] = 1.0

                v_in = vec_in[center]
                v_outs = vec_out[outs]
                grad = (_sigmoid(v_outs @ v_in) - labels) * step
                delta_in = grad @ v_outs
                np.add.at(vec_out, outs, -np.outer(grad, v_in))
                vec_in[center] -= delta_in
    log.info("skip-gram trained: %d terms, dim %d", len(vocab), dim)
    return EmbeddingTable(vocab, vec_in)


def save_vectors(table, path):
    """Write the standard text vector format with a count/dim header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table.vocabulary)} {table.dim}\n")
        for term, row in zip(table.vocabulary, table.vectors):
            fh.write(term + " " + " ".join(f"{x:.17g}" for x in row) + "\n")


def load_vectors(path):
    """Read "term v1 ... vd" lines (optional count/dim header)."""
    terms = []
    rows = []
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(" ")
            if lineno == 1 and len(parts) == 2:
                try:
                    int(parts[0]), int(parts[1])
                    continue  # header
                except ValueError:
                    pass
            term, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise ValueError(
                    f"{path}:{lineno}: expected {dim} components, got {len(values)}"
                )
            terms.append(term)
            rows.append([float(v) for v in values])
    if not terms:
        raise ValueError(f"{path}: no vectors found")
    return EmbeddingTable(terms, np.asarray(rows, dtype=np.float64))


def levenshtein(a, b):
    """Unit-cost insert/delete/substitute edit distance."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


class RelationMatrix:
    """Sparse symmetric term relatedness weights with implicit unit diagonal."""

    def __init__(self):
        self._adj = {}

    def set(self, term_a, term_b, weight):
        if term_a == term_b:
            raise ValueError("diagonal entries are implicitly 1")
        if not 0.0 <= weight <= 1.0:
            raise ValueError(f"weight out of range: {weight}")
        self._adj.setdefault(term_a, {})[term_b] = weight
        self._adj.setdefault(term_b, {})[term_a] = weight

    def weight(self, term_a, term_b):
        if term_a == term_b:
            return 1.0
        return self._adj.get(term_a, {}).get(term_b, 0.0)

    def neighbors(self, term):
        return self._adj.get(term, {})

    def __len__(self):
        return sum(len(v) for v in self._adj.values()) // 2

    def items(self):
        """Canonical sorted (term_i, term_j, weight) triples, term_i < term_j."""
        seen = []
        for a, nbrs in self._adj.items():
            for b, w in nbrs.items():
                if a < b:
                    seen.append((a, b, w))
        return sorted(seen)


def build_relation_matrix_embedding(table, vocab, threshold=0.2):
    """Clipped-squared-cosine relation matrix over ``vocab``.

    m_ij = max(0, cos(v_i, v_j))^2 when that value reaches ``threshold``;
    out-of-table terms only contribute their implicit diagonal.
    """
    matrix = RelationMatrix()
    known = [t for t in dict.fromkeys(vocab) if t in table]
    if not known:
        return matrix
    vectors = np.stack([table.get(t) for t in known])
    norms = np.linalg.norm(vectors, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = vectors / safe[:, None]
    unit[norms == 0] = 0.0

    block = 1024
    for start in range(0, len(known), block):
        stop = min(start + block, len(known))
        sims = unit[start:stop] @ unit.T
        weights = np.clip(sims, 0.0, None) ** 2
        rows, cols = np.nonzero(weights >= threshold)
        for r, c in zip(rows, cols):
            i, j = start + r, c
            if i < j:
                matrix.set(known[i], known[j], min(1.0, float(weights[r, c])))
    return matrix


def build_relation_matrix_levenshtein(vocab, threshold=0.2):
    """Squared normalized edit-similarity relation matrix over ``vocab``.

    m_ij = (1 - lev(t_i, t_j) / max(|t_i|, |t_j|))^2 when it reaches the
    threshold.  The length-difference lower bound on edit distance prunes
    pairs that cannot reach the threshold.
    """
    matrix = RelationMatrix()
    terms = sorted(dict.fromkeys(vocab))
    for i, a in enumerate(terms):
        for b in terms[i + 1:]:
            longest = max(len(a), len(b))
            if longest == 0:
                continue
            bound = (1.0 - abs(len(a) - len(b)) / longest) ** 2
            if bound < threshold:
                continue
            sim = (1.0 - levenshtein(a, b) / longest) ** 2
            if sim >= threshold and sim > 0.0:
                matrix.set(a, b, min(1.0, sim))
    return matrix


_RELMAT_MAGIC = b"KURELMT1"


def save_relation_matrix(matrix, path, vocab, threshold, kind):
    """Persist as sorted (i, j, weight) index triples after a JSON header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    terms = sorted(dict.fromkeys(vocab))
    index = {t: i for i, t in enumerate(terms)}
    triples = [
        (index[a], index[b], w)
        for a, b, w in matrix.items()
        if a in index and b in index
    ]
    triples.sort()
    header = {
        "kind": kind,
        "threshold": threshold,
        "vocab_hash": sha256_text("\n".join(terms)),
        "entries": len(triples),
        "vocab": terms,
    }
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_RELMAT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for i, j, w in triples:
            fh.write(struct.pack("<IId", i, j, w))


def load_relation_matrix(path):
    """Load a persisted relation matrix; returns (matrix, header)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_RELMAT_MAGIC))
        if magic != _RELMAT_MAGIC:
            raise ValueError(f"{path}: not a relation matrix file")
        (size,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(size).decode("utf-8"))
        terms = header["vocab"]
        matrix = RelationMatrix()
        entry = struct.Struct("<IId")
        for _ in range(header["entries"]):
            i, j, w = entry.unpack(fh.read(entry.size))
            matrix.set(terms[i], terms[j], w)
    return matrix, header
