"""Synthetic data generators for experiments and the test suite.

Three kinds of data:

* a toy Stack-Exchange-style dump (JSONL posts + links) whose link motifs
  produce all four relatedness classes,
* pair corpora with planted class-indicative token overlap, where the
  class determines which text parts two units share,
* small numeric sets (topic-cluster sentences, separable blobs) for the
  embedding and SVM sanity checks.
"""

import random

import numpy as np

from .graph import LabeledPair
from .labels import DIRECT, DUPLICATE, INDIRECT, ISOLATED
from .textprep import CleanKU
from .util import write_jsonl

# Which text parts overlap per class: the relatedness staircase.
_OVERLAP = {
    DUPLICATE: ("title", "body", "answers"),
    DIRECT: ("title", "body"),
    INDIRECT: ("title",),
    ISOLATED: (),
}
_PART_LENGTHS = {"title": 6, "body": 9, "answers": 12}


def _draw_tokens(rng, pool, n):
    return [pool[rng.randrange(len(pool))] for _ in range(n)]


def make_relatedness_corpus(n_pairs, seed=0, vocab_size=400, start_id=10_000):
    """Pairs of cleaned units whose shared parts identify the class.

    Returns (clean_by_id, pairs).  Classes cycle so counts stay balanced.
    For an overlapping part both units carry an identical core sequence
    plus one unit-specific noise token; other parts are disjoint draws.
    """
    rng = random.Random(seed)
    pool = [f"w{i:04d}" for i in range(vocab_size)]
    classes = list(_OVERLAP)
    clean_by_id = {}
    pairs = []
    for k in range(n_pairs):
        label = classes[k % len(classes)]
        id1 = start_id + 2 * k
        id2 = id1 + 1
        parts = {1: {}, 2: {}}
        for part, length in _PART_LENGTHS.items():
            if part in _OVERLAP[label]:
                shared = _draw_tokens(rng, pool, rng.randint(length - 2, length))
                parts[1][part] = shared
                parts[2][part] = list(shared)
            else:
                parts[1][part] = _draw_tokens(rng, pool, rng.randint(length - 2, length))
                parts[2][part] = _draw_tokens(rng, pool, rng.randint(length - 2, length))
        for side, ku_id in ((1, id1), (2, id2)):
            clean_by_id[ku_id] = CleanKU(
                id=ku_id,
                title_tokens=parts[side]["title"],
                body_tokens=parts[side]["body"],
                body_code=[],
                answers_tokens=parts[side]["answers"],
                answers_code=[],
                accepted_answer_tokens=None,
                title_text=" ".join(parts[side]["title"]),
                body_text=" ".join(parts[side]["body"]),
                answers_text=" ".join(parts[side]["answers"]),
            )
        pairs.append(LabeledPair(id1, id2, label))
    return clean_by_id, pairs


def make_cluster_corpus(n_sentences=1000, words_per_topic=20, sentence_len=8,
                        seed=0):
    """Two interleaved topic clusters; sentences draw from one topic each.

    Returns (sentences, topic_a_words, topic_b_words).
    """
    rng = random.Random(seed)
    topic_a = [f"alpha{i:02d}" for i in range(words_per_topic)]
    topic_b = [f"beta{i:02d}" for i in range(words_per_topic)]
    sentences = []
    for k in range(n_sentences):
        pool = topic_a if k % 2 == 0 else topic_b
        sentences.append(_draw_tokens(rng, pool, sentence_len))
    return sentences, topic_a, topic_b


def make_blobs(n_per_class=100, centers=((-5.0, 0.0), (5.0, 0.0)), scale=0.5,
               seed=0):
    """Two well-separated Gaussian blobs; returns (X, labels)."""
    rng = np.random.default_rng(seed)
    xs = []
    labels = []
    for ci, center in enumerate(centers):
        xs.append(rng.normal(loc=center, scale=scale, size=(n_per_class, 2)))
        labels.extend([f"blob{ci}"] * n_per_class)
    return np.vstack(xs), labels


def make_onehot_features(n_per_class, classes, noise=0.05, seed=0):
    """Features that are a noisy one-hot of the class index."""
    rng = np.random.default_rng(seed)
    rows = []
    labels = []
    for ci, cls in enumerate(classes):
        block = rng.normal(scale=noise, size=(n_per_class, len(classes)))
        block[:, ci] += 1.0
        rows.append(block)
        labels.extend([cls] * n_per_class)
    return np.vstack(rows), labels


_BODY_TEMPLATES = (
    "<p>How do I parse EntityManage output in javax.persistence.Query?"
    " I tried {w} times.</p><pre><code>int a = {n};</code></pre>",
    "<p>See https://example.org/{w} for details &amp; background.</p>"
    "<p>My build fails with error {n}.</p>",
    "<p>Using camelCaseNames like getHTTPResponse in {w} code.</p>"
    "<pre><code>System.out.println({n});</code></pre>",
)

_SIGNAL_BODY = (
    "<blockquote><p><strong>Possible Duplicate:</strong><br>"
    "<a href=\"https://example.org/q\">How to convert {w}?</a></p></blockquote>"
    "<p>My question is about {w} conversion, attempt {n}.</p>"
)


def make_toy_dump(out_dir, n_motifs=300, seed=0, tag="java"):
    """Write a toy dump (posts.jsonl, postlinks.jsonl) under ``out_dir``.

    Each motif contributes a duplicate triangle, a direct chain producing
    indirect pairs at distances 2-3, two isolated singletons, and a
    detached direct pair; a sprinkle of off-tag questions exercises the
    tag filter.  Returns the two file paths.
    """
    rng = random.Random(seed)
    posts = []
    links = []
    question_posts = {}
    next_id = 1

    def add_question(tags, body, title=None):
        nonlocal next_id
        qid = next_id
        next_id += 1
        row = {
            "Id": qid,
            "PostTypeId": 1,
            "Title": title or f"Question {qid} about topic{rng.randrange(50)}",
            "Body": body,
            "Tags": "".join(f"<{t}>" for t in tags),
        }
        posts.append(row)
        question_posts[qid] = row
        return qid

    def add_answer(parent):
        nonlocal next_id
        aid = next_id
        next_id += 1
        posts.append({
            "Id": aid,
            "PostTypeId": 2,
            "ParentId": parent,
            "Body": _BODY_TEMPLATES[rng.randrange(len(_BODY_TEMPLATES))].format(
                w=f"word{rng.randrange(100)}", n=rng.randrange(1000)
            ),
        })
        return aid

    def add_link(a, b, kind_code, link_id):
        links.append({
            "Id": link_id,
            "PostId": a,
            "RelatedPostId": b,
            "LinkTypeId": kind_code,
        })

    link_id = 1
    for _ in range(n_motifs):
        def body(signal=False):
            template = _SIGNAL_BODY if signal else _BODY_TEMPLATES[
                rng.randrange(len(_BODY_TEMPLATES))
            ]
            return template.format(w=f"word{rng.randrange(100)}", n=rng.randrange(1000))

        # duplicate triangle q0-q1-q2 (closure adds the third edge)
        q0 = add_question([tag], body(signal=True))
        q1 = add_question([tag], body())
        q2 = add_question([tag], body())
        add_link(q0, q1, 3, link_id); link_id += 1
        add_link(q1, q2, 3, link_id); link_id += 1
        # direct chain hanging off the triangle: indirect pairs at 2-3
        q3 = add_question([tag], body())
        q4 = add_question([tag], body())
        add_link(q3, q0, 1, link_id); link_id += 1
        add_link(q4, q3, 1, link_id); link_id += 1
        # detached direct pair and isolated singletons
        q7 = add_question([tag], body())
        q8 = add_question([tag], body())
        add_link(q7, q8, 1, link_id); link_id += 1
        add_question([tag], body())
        add_question([tag], body())
        # off-tag question the filter must drop
        off = add_question(["python"], body())
        for qid in (q0, q1, q3, q7, off):
            if rng.random() < 0.8:
                aid = add_answer(qid)
                if rng.random() < 0.5:
                    question_posts[qid]["AcceptedAnswerId"] = aid
        # a conflicting pair: linked as both duplicate and direct
        if rng.random() < 0.2:
            add_link(q7, q8, 3, link_id); link_id += 1

    posts_path = f"{out_dir}/posts.jsonl"
    links_path = f"{out_dir}/postlinks.jsonl"
    write_jsonl(posts_path, posts)
    write_jsonl(links_path, links)
    return posts_path, links_path
