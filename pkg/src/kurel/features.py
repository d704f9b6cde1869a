"""Hand-crafted pair features: n-gram overlaps, TF-IDF cosine, soft-cosines.

Term vectors are plain sparse dicts (term -> weight).  Per text part
(title, body, answers) the full feature family is:

    word n-gram overlap (n = 1, 2, 3)
    character n-gram overlap (n = 3, 4, 5)
    TF-IDF cosine
    soft-cosine under the corpus / external / levenshtein relation matrix

plus one presence flag per part (0 when either side of the pair lacks the
part).  The selected projection keeps the cosine and the three
soft-cosines, which dominate the single-feature rankings.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embeddings import RelationMatrix
from .util import sha256_text

log = logging.getLogger(__name__)

PARTS = ("title", "body", "answers")
FAMILIES = (
    "word_1gram",
    "word_2gram",
    "word_3gram",
    "char_3gram",
    "char_4gram",
    "char_5gram",
    "tfidf_cosine",
    "soft_corpus",
    "soft_external",
    "soft_levenshtein",
)
SELECTED_FAMILIES = ("tfidf_cosine", "soft_corpus", "soft_external", "soft_levenshtein")


def feature_names(parts=PARTS, families=FAMILIES):
    """Fixed dimension ordering: part-major feature scores, then flags."""
    names = [f"{part}.{family}" for part in parts for family in families]
    names.extend(f"{part}.present" for part in parts)
    return tuple(names)


def common_ngrams(tokens_a, tokens_b, n):
    """Number of distinct word n-grams shared by the two token lists."""
    if n < 1:
        raise ValueError("n must be >= 1")
    grams_a = {tuple(tokens_a[i:i + n]) for i in range(len(tokens_a) - n + 1)}
    grams_b = {tuple(tokens_b[i:i + n]) for i in range(len(tokens_b) - n + 1)}
    return len(grams_a & grams_b)


def common_char_ngrams(text_a, text_b, n):
    """Number of distinct character n-grams shared by the two strings."""
    if n < 1:
        raise ValueError("n must be >= 1")
    grams_a = {text_a[i:i + n] for i in range(len(text_a) - n + 1)}
    grams_b = {text_b[i:i + n] for i in range(len(text_b) - n + 1)}
    return len(grams_a & grams_b)


@dataclass
class TfidfModel:
    """Document frequencies fitted on the train+dev corpus of one text part."""

    df: dict
    doc_count: int
    vocab_hash: str = ""

    def __post_init__(self):
        if not self.vocab_hash:
            self.vocab_hash = sha256_text("\n".join(sorted(self.df)))


def tfidf_fit(corpus):
    """Fit document frequencies over a corpus of token lists."""
    corpus = list(corpus)
    if not corpus:
        raise ValueError("cannot fit TF-IDF on an empty corpus")
    df = {}
    for tokens in corpus:
        for term in set(tokens):
            df[term] = df.get(term, 0) + 1
    return TfidfModel(df=df, doc_count=len(corpus))


def tfidf_transform(model, tokens):
    """L2-normalized tf * (ln((1+D)/(1+df)) + 1) sparse vector.

    Terms unseen at fit time contribute nothing.
    """
    if model is None or model.doc_count < 1:
        raise ValueError("TF-IDF model is not fitted")
    counts = {}
    for term in tokens:
        if term in model.df:
            counts[term] = counts.get(term, 0) + 1
    if not counts:
        return {}
    d = model.doc_count
    vec = {
        term: tf * (math.log((1 + d) / (1 + model.df[term])) + 1.0)
        for term, tf in counts.items()
    }
    norm = math.sqrt(sum(w * w for w in vec.values()))
    return {term: w / norm for term, w in vec.items()}


def cosine(a, b):
    """Cosine over sparse term vectors; 0 when either norm is 0."""
    if len(b) < len(a):
        a, b = b, a
    dot = sum(w * b[t] for t, w in a.items() if t in b)
    norm_a = math.sqrt(sum(w * w for w in a.values()))
    norm_b = math.sqrt(sum(w * w for w in b.values()))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (norm_a * norm_b)


def _relation_form(a, b, matrix):
    """sum_ij a_i m_ij b_j with the implicit unit diagonal."""
    total = 0.0
    for term, weight in a.items():
        other = b.get(term)
        if other is not None:
            total += weight * other
        for nbr, m in matrix.neighbors(term).items():
            other = b.get(nbr)
            if other is not None:
                total += m * weight * other
    return total


def soft_cosine(a, b, matrix):
    """Generalized cosine under a term relation matrix.

    Negative quadratic forms (possible when the thresholded matrix is not
    PSD) are clamped to zero with a warning, yielding a 0 score.
    """
    qa = _relation_form(a, a, matrix)
    qb = _relation_form(b, b, matrix)
    if qa < 0.0 or qb < 0.0:
        log.warning("non-PSD relation matrix: quadratic form clamped to 0")
        qa = max(qa, 0.0)
        qb = max(qb, 0.0)
    if qa == 0.0 or qb == 0.0:
        return 0.0
    return _relation_form(a, b, matrix) / (math.sqrt(qa) * math.sqrt(qb))


@dataclass
class FeatureModels:
    """Fitted inputs for pair feature extraction."""

    tfidf: dict  # part -> TfidfModel
    rel_corpus: RelationMatrix = field(default_factory=RelationMatrix)
    rel_external: RelationMatrix = field(default_factory=RelationMatrix)
    rel_levenshtein: RelationMatrix = field(default_factory=RelationMatrix)
    parts: tuple = PARTS


@dataclass
class FeatureVector:
    ku1: int
    ku2: int
    names: tuple
    values: np.ndarray
    label: str = None

    def as_dict(self):
        return dict(zip(self.names, self.values.tolist()))


def pair_features(ku1, ku2, models, selected=False):
    """Compute the per-part feature vector for a pair of cleaned units.

    TF-IDF weighted vectors feed the cosine and all three soft-cosines.
    A part empty on either side scores 0 across the board and drops its
    presence flag to 0.
    """
    parts = models.parts
    families = SELECTED_FAMILIES if selected else FAMILIES
    values = []
    flags = []
    for part in parts:
        tokens_a = ku1.part_tokens(part)
        tokens_b = ku2.part_tokens(part)
        if not tokens_a or not tokens_b:
            values.extend([0.0] * len(families))
            flags.append(0.0)
            continue
        flags.append(1.0)
        model = models.tfidf[part]
        vec_a = tfidf_transform(model, tokens_a)
        vec_b = tfidf_transform(model, tokens_b)
        text_a = " ".join(tokens_a)
        text_b = " ".join(tokens_b)
        computed = {
            "word_1gram": common_ngrams(tokens_a, tokens_b, 1),
            "word_2gram": common_ngrams(tokens_a, tokens_b, 2),
            "word_3gram": common_ngrams(tokens_a, tokens_b, 3),
            "char_3gram": common_char_ngrams(text_a, text_b, 3),
            "char_4gram": common_char_ngrams(text_a, text_b, 4),
            "char_5gram": common_char_ngrams(text_a, text_b, 5),
            "tfidf_cosine": cosine(vec_a, vec_b),
            "soft_corpus": soft_cosine(vec_a, vec_b, models.rel_corpus),
            "soft_external": soft_cosine(vec_a, vec_b, models.rel_external),
            "soft_levenshtein": soft_cosine(vec_a, vec_b, models.rel_levenshtein),
        }
        values.extend(float(computed[f]) for f in families)
    values.extend(flags)
    return FeatureVector(
        ku1=ku1.id,
        ku2=ku2.id,
        names=feature_names(parts, families),
        values=np.asarray(values, dtype=np.float64),
    )


@dataclass
class FeatureDataset:
    """Feature matrix plus labels for one split."""

    names: tuple
    matrix: np.ndarray
    labels: list
    pairs: list

    def select(self, names):
        index = {n: i for i, n in enumerate(self.names)}
        cols = [index[n] for n in names]
        return FeatureDataset(tuple(names), self.matrix[:, cols], self.labels, self.pairs)

    def family_columns(self, family):
        return tuple(n for n in self.names if n.endswith(f".{family}"))

    def part_columns(self, part):
        return tuple(n for n in self.names if n.startswith(f"{part}."))

    @classmethod
    def from_vectors(cls, vectors, labels):
        if not vectors:
            raise ValueError("no feature vectors")
        names = vectors[0].names
        matrix = np.stack([v.values for v in vectors])
        pairs = [(v.ku1, v.ku2) for v in vectors]
        return cls(names, matrix, list(labels), pairs)


def fit_tfidf_models(clean_by_id, pair_sets, parts=PARTS):
    """Fit one TF-IDF model per part over the KUs referenced by the pairs.

    ``pair_sets`` should cover train and dev only; test documents never
    reach the fit.
    """
    ku_ids = sorted({
        ku for pairs in pair_sets for p in pairs for ku in (p.ku1, p.ku2)
    })
    models = {}
    for part in parts:
        docs = [clean_by_id[i].part_tokens(part) for i in ku_ids]
        models[part] = tfidf_fit(docs)
    return models


def union_vocabulary(clean_by_id, pairs_lists, parts=PARTS):
    """Sorted union vocabulary of the parts of all KUs touched by the pairs."""
    vocab = set()
    for pairs in pairs_lists:
        for p in pairs:
            for ku in (p.ku1, p.ku2):
                for part in parts:
                    vocab.update(clean_by_id[ku].part_tokens(part))
    return sorted(vocab)


def save_tfidf_models(models, path):
    payload = {
        "version": 1,
        "parts": {
            part: {"df": m.df, "doc_count": m.doc_count, "vocab_hash": m.vocab_hash}
            for part, m in models.items()
        },
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload), encoding="utf-8")


def load_tfidf_models(path):
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return {
        part: TfidfModel(df=spec["df"], doc_count=spec["doc_count"],
                         vocab_hash=spec["vocab_hash"])
        for part, spec in payload["parts"].items()
    }
