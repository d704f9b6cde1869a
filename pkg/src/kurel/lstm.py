"""Shared-encoder BiLSTM over knowledge-unit pairs, with manual backprop.

One bidirectional LSTM encodes all input sequences (three text parts per
unit, or one in two-input mode).  The pair representation is the
concatenation of every cross-unit encoding dot product with the encodings
themselves; a ReLU dense layer, dropout and a softmax head produce class
probabilities.  Gates read the previous cell state through full weight
matrices:

    X   = [x_t; h_{t-1}]
    i_t = sigmoid(W_ix X + W_ic c_{t-1} + b_i)
    f_t = sigmoid(W_fx X + W_fc c_{t-1} + b_f)
    o_t = sigmoid(W_ox X + W_oc c_{t-1} + b_o)
    c_t = f_t * c_{t-1} + i_t * tanh(W_cx X + b_c)
    h_t = o_t * tanh(c_t)

Everything runs in float64 with explicit gradients; `gradient_check`
compares them against central finite differences.  Training is seeded,
single-worker, and bit-reproducible.
"""

import copy
import io
import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from .labels import canonical_classes

log = logging.getLogger(__name__)

PAD_ID = 0
UNK_ID = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"

_GATE_TENSORS = (
    "W_ix", "W_ic", "b_i",
    "W_fx", "W_fc", "b_f",
    "W_ox", "W_oc", "b_o",
    "W_cx", "b_c",
)


class NonFiniteError(FloatingPointError):
    """A forward pass produced non-finite activations."""


@dataclass
class NetworkConfig:
    vocab_size: int
    emb_dim: int = 300
    hidden: int = 128
    dense_units: int = 50
    n_classes: int = 4
    n_parts: int = 3
    lengths: tuple = (10, 60, 180)
    dropout: float = 0.2

    @property
    def n_interactions(self):
        return self.n_parts * self.n_parts

    @property
    def concat_dim(self):
        return self.n_interactions + 2 * self.n_parts * 2 * self.hidden


@dataclass
class LstmParams:
    """One direction's gate tensors."""

    W_ix: np.ndarray
    W_ic: np.ndarray
    b_i: np.ndarray
    W_fx: np.ndarray
    W_fc: np.ndarray
    b_f: np.ndarray
    W_ox: np.ndarray
    W_oc: np.ndarray
    b_o: np.ndarray
    W_cx: np.ndarray
    b_c: np.ndarray


def direction_params(params, prefix):
    """View of one direction's tensors out of the flat parameter dict."""
    return LstmParams(**{name: params[f"{prefix}.{name}"] for name in _GATE_TENSORS})


@dataclass
class Vocab:
    terms: list
    id_of: dict

    @property
    def size(self):
        return len(self.terms)

    def encode(self, tokens, length):
        ids = [self.id_of.get(t, UNK_ID) for t in tokens[:length]]
        ids.extend([PAD_ID] * (length - len(ids)))
        return np.asarray(ids, dtype=np.int64)


def build_vocab(token_docs, min_freq=2):
    """Vocabulary over the train split: terms at or above min_freq, plus
    the reserved pad/unk ids."""
    freq = {}
    for doc in token_docs:
        for t in doc:
            freq[t] = freq.get(t, 0) + 1
    kept = sorted((t for t, c in freq.items() if c >= min_freq),
                  key=lambda t: (-freq[t], t))
    terms = [PAD_TOKEN, UNK_TOKEN] + kept
    return Vocab(terms=terms, id_of={t: i for i, t in enumerate(terms)})


@dataclass
class PairExample:
    sequences: tuple  # 2 * n_parts int arrays, fixed lengths
    label: str
    ku1: int = -1
    ku2: int = -1


def make_examples(pairs, clean_by_id, vocab, lengths=(10, 60, 180),
                  parts=("title", "body", "answers")):
    examples = []
    for pair in pairs:
        seqs = []
        for ku_id in (pair.ku1, pair.ku2):
            ku = clean_by_id[ku_id]
            for part, length in zip(parts, lengths):
                seqs.append(vocab.encode(ku.part_tokens(part), length))
        examples.append(PairExample(tuple(seqs), pair.label, pair.ku1, pair.ku2))
    return examples


def two_input_mode(example, length=70):
    """Collapse a six-input example to two title+body sequences.

    Pad ids are stripped, each unit's title and body are concatenated, and
    the result is re-padded to ``length`` (title and body budgets summed).
    """
    n_parts = len(example.sequences) // 2
    if n_parts < 2:
        raise ValueError("example already has fewer than two parts per unit")
    merged = []
    for side in range(2):
        title = example.sequences[side * n_parts]
        body = example.sequences[side * n_parts + 1]
        ids = np.concatenate([title[title != PAD_ID], body[body != PAD_ID]])[:length]
        padded = np.full(length, PAD_ID, dtype=np.int64)
        padded[:ids.size] = ids
        merged.append(padded)
    return PairExample(tuple(merged), example.label, example.ku1, example.ku2)


def init_params(config, seed=0, vocab=None, pretrained=None):
    """Seeded parameter init: Glorot-uniform weights, zero biases.

    Embedding rows start uniform in [-0.05, 0.05] (pad row pinned to zero)
    and are overwritten with pretrained vectors for matching terms when a
    table is supplied.
    """
    rng = np.random.default_rng(seed)
    d, h = config.emb_dim, config.hidden
    params = {}

    emb = rng.uniform(-0.05, 0.05, size=(config.vocab_size, d))
    emb[PAD_ID] = 0.0
    if pretrained is not None:
        if pretrained.dim != d:
            raise ValueError(
                f"pretrained dim {pretrained.dim} != configured dim {d}"
            )
        if vocab is None:
            raise ValueError("pretrained vectors require the vocabulary")
        hits = 0
        for i, term in enumerate(vocab.terms):
            if i == PAD_ID:
                continue
            vec = pretrained.get(term)
            if vec is not None:
                emb[i] = vec
                hits += 1
        log.info("pretrained init: %d/%d terms matched", hits, len(vocab.terms))
    params["emb"] = emb

    def glorot(shape):
        limit = math.sqrt(6.0 / sum(shape))
        return rng.uniform(-limit, limit, size=shape)

    for prefix in ("fwd", "bwd"):
        for gate in ("i", "f", "o"):
            params[f"{prefix}.W_{gate}x"] = glorot((h, d + h))
            params[f"{prefix}.W_{gate}c"] = glorot((h, h))
            params[f"{prefix}.b_{gate}"] = np.zeros(h)
        params[f"{prefix}.W_cx"] = glorot((h, d + h))
        params[f"{prefix}.b_c"] = np.zeros(h)

    params["dense.W"] = glorot((config.dense_units, config.concat_dim))
    params["dense.b"] = np.zeros(config.dense_units)
    params["out.W"] = glorot((config.n_classes, config.dense_units))
    params["out.b"] = np.zeros(config.n_classes)
    return params


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def lstm_step(p, x_t, h_prev, c_prev):
    """One gate update on vectors; returns (h_t, c_t)."""
    for name, value in (("x_t", x_t), ("h_prev", h_prev), ("c_prev", c_prev)):
        if not np.all(np.isfinite(value)):
            raise NonFiniteError(f"non-finite {name} entering lstm_step")
    x = np.concatenate([x_t, h_prev])
    i = _sigmoid(p.W_ix @ x + p.W_ic @ c_prev + p.b_i)
    f = _sigmoid(p.W_fx @ x + p.W_fc @ c_prev + p.b_f)
    o = _sigmoid(p.W_ox @ x + p.W_oc @ c_prev + p.b_o)
    c = f * c_prev + i * np.tanh(p.W_cx @ x + p.b_c)
    h = o * np.tanh(c)
    return h, c


def _run_direction(params, prefix, emb_seq, mask):
    """Masked LSTM over (B, T, d); returns final hidden state and caches."""
    p = direction_params(params, prefix)
    batch, steps, _ = emb_seq.shape
    hidden = p.b_i.shape[0]
    h = np.zeros((batch, hidden))
    c = np.zeros((batch, hidden))
    caches = []
    for t in range(steps):
        x = emb_seq[:, t, :]
        m = mask[:, t][:, None]
        xc = np.hstack([x, h])
        i = _sigmoid(xc @ p.W_ix.T + c @ p.W_ic.T + p.b_i)
        f = _sigmoid(xc @ p.W_fx.T + c @ p.W_fc.T + p.b_f)
        o = _sigmoid(xc @ p.W_ox.T + c @ p.W_oc.T + p.b_o)
        g = np.tanh(xc @ p.W_cx.T + p.b_c)
        c_new = f * c + i * g
        h_new = o * np.tanh(c_new)
        caches.append((xc, c, i, f, o, g, c_new, m))
        h = m * h_new + (1.0 - m) * h
        c = m * c_new + (1.0 - m) * c
    return h, caches


def _backprop_direction(params, prefix, caches, dh_final, grads, d_emb_seq):
    p = direction_params(params, prefix)
    dh = dh_final
    dc = np.zeros_like(dh)
    d = d_emb_seq.shape[2]
    for t in range(len(caches) - 1, -1, -1):
        xc, c_prev, i, f, o, g, c_new, m = caches[t]
        dh_new = m * dh
        dh_prev = (1.0 - m) * dh
        dc_new = m * dc
        dc_prev = (1.0 - m) * dc

        tcn = np.tanh(c_new)
        do = dh_new * tcn
        dc_new = dc_new + dh_new * o * (1.0 - tcn * tcn)

        di = dc_new * g
        df = dc_new * c_prev
        dg = dc_new * i
        dc_prev = dc_prev + dc_new * f

        dzi = di * i * (1.0 - i)
        dzf = df * f * (1.0 - f)
        dzo = do * o * (1.0 - o)
        dzg = dg * (1.0 - g * g)

        grads[f"{prefix}.W_ix"] += dzi.T @ xc
        grads[f"{prefix}.W_ic"] += dzi.T @ c_prev
        grads[f"{prefix}.b_i"] += dzi.sum(axis=0)
        grads[f"{prefix}.W_fx"] += dzf.T @ xc
        grads[f"{prefix}.W_fc"] += dzf.T @ c_prev
        grads[f"{prefix}.b_f"] += dzf.sum(axis=0)
        grads[f"{prefix}.W_ox"] += dzo.T @ xc
        grads[f"{prefix}.W_oc"] += dzo.T @ c_prev
        grads[f"{prefix}.b_o"] += dzo.sum(axis=0)
        grads[f"{prefix}.W_cx"] += dzg.T @ xc
        grads[f"{prefix}.b_c"] += dzg.sum(axis=0)

        dxc = dzi @ p.W_ix + dzf @ p.W_fx + dzo @ p.W_ox + dzg @ p.W_cx
        dc_prev = dc_prev + dzi @ p.W_ic + dzf @ p.W_fc + dzo @ p.W_oc

        d_emb_seq[:, t, :] += dxc[:, :d]
        dh = dxc[:, d:] + dh_prev
        dc = dc_prev


def bilstm_encode(fwd, bwd, sequence, mask=None):
    """Encode one embedded sequence (T, d) into a 2H vector.

    The forward half is the forward pass's final hidden state; the backward
    half comes from running the reversed sequence, i.e. the state at
    position 0.  Masked (pad) positions carry state through unchanged.
    """
    seq = sequence[None, :, :]
    if mask is None:
        mask = np.ones(seq.shape[:2])
    else:
        mask = np.asarray(mask, dtype=np.float64)[None, :]
    params = {}
    for prefix, p in (("fwd", fwd), ("bwd", bwd)):
        for name in _GATE_TENSORS:
            params[f"{prefix}.{name}"] = getattr(p, name)
    h_f, _ = _run_direction(params, "fwd", seq, mask)
    h_b, _ = _run_direction(params, "bwd", seq[:, ::-1, :], mask[:, ::-1])
    return np.concatenate([h_f[0], h_b[0]])


def _forward_batch(params, config, seqs, train_mode=False, rng=None):
    """Full network forward over a batch; returns (probs, cache)."""
    n_seqs = 2 * config.n_parts
    if len(seqs) != n_seqs:
        raise ValueError(f"expected {n_seqs} sequences, got {len(seqs)}")
    batch = seqs[0].shape[0]
    emb = params["emb"]

    encs = []
    enc_caches = []
    for ids in seqs:
        mask = (ids != PAD_ID).astype(np.float64)
        emb_seq = emb[ids]
        h_f, cache_f = _run_direction(params, "fwd", emb_seq, mask)
        h_b, cache_b = _run_direction(params, "bwd", emb_seq[:, ::-1, :], mask[:, ::-1])
        encs.append(np.hstack([h_f, h_b]))
        enc_caches.append((ids, mask, cache_f, cache_b))

    p = config.n_parts
    dots = np.empty((batch, p * p))
    for i in range(p):
        for j in range(p):
            dots[:, i * p + j] = np.sum(encs[i] * encs[p + j], axis=1)

    z = np.hstack([dots] + encs)
    pre = z @ params["dense.W"].T + params["dense.b"]
    hidden = np.maximum(pre, 0.0)

    if train_mode and config.dropout > 0.0:
        if rng is None:
            raise ValueError("train-mode forward needs an rng for dropout")
        keep = 1.0 - config.dropout
        drop_mask = (rng.random(hidden.shape) < keep) / keep
        dropped = hidden * drop_mask
    else:
        drop_mask = None
        dropped = hidden

    logits = dropped @ params["out.W"].T + params["out.b"]
    if not np.all(np.isfinite(logits)):
        raise NonFiniteError("non-finite logits in forward pass")
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)

    cache = {
        "seqs": seqs,
        "encs": encs,
        "enc_caches": enc_caches,
        "dots": dots,
        "z": z,
        "pre": pre,
        "drop_mask": drop_mask,
        "dropped": dropped,
        "logits": logits,
        "probs": probs,
    }
    return probs, cache


def interaction_dots(params, config, seqs):
    """Just the pairwise encoding dot products (for interaction-level tests)."""
    probs, cache = _forward_batch(params, config, seqs)
    del probs
    return cache["dots"]


def _cross_entropy(logits, y_idx):
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(len(y_idx)), y_idx]
    return float(np.mean(log_z - picked))


def _backward_batch(params, config, cache, y_idx):
    """Gradients of mean cross-entropy w.r.t. every parameter tensor."""
    probs = cache["probs"]
    batch = probs.shape[0]
    grads = {k: np.zeros_like(v) for k, v in params.items()}

    dlogits = probs.copy()
    dlogits[np.arange(batch), y_idx] -= 1.0
    dlogits /= batch

    grads["out.W"] += dlogits.T @ cache["dropped"]
    grads["out.b"] += dlogits.sum(axis=0)
    ddropped = dlogits @ params["out.W"]

    if cache["drop_mask"] is not None:
        dhidden = ddropped * cache["drop_mask"]
    else:
        dhidden = ddropped
    dpre = dhidden * (cache["pre"] > 0.0)

    grads["dense.W"] += dpre.T @ cache["z"]
    grads["dense.b"] += dpre.sum(axis=0)
    dz = dpre @ params["dense.W"]

    p = config.n_parts
    n_inter = p * p
    encs = cache["encs"]
    ddots = dz[:, :n_inter]
    denc = [np.zeros_like(e) for e in encs]
    width = encs[0].shape[1]
    for k in range(2 * p):
        start = n_inter + k * width
        denc[k] += dz[:, start:start + width]
    for i in range(p):
        for j in range(p):
            dij = ddots[:, i * p + j][:, None]
            denc[i] += dij * encs[p + j]
            denc[p + j] += dij * encs[i]

    hidden = config.hidden
    demb = grads["emb"]
    for k, (ids, mask, cache_f, cache_b) in enumerate(cache["enc_caches"]):
        d_emb_seq = np.zeros(ids.shape + (config.emb_dim,))
        _backprop_direction(params, "fwd", cache_f, denc[k][:, :hidden],
                            grads, d_emb_seq)
        d_emb_rev = np.zeros_like(d_emb_seq)
        _backprop_direction(params, "bwd", cache_b, denc[k][:, hidden:],
                            grads, d_emb_rev)
        d_emb_seq += d_emb_rev[:, ::-1, :]
        np.add.at(demb, ids.ravel(), d_emb_seq.reshape(-1, config.emb_dim))
    demb[PAD_ID] = 0.0  # pad embedding stays fixed at zero
    return grads


def forward(params, config, example, train_mode=False, rng=None):
    """Class probabilities for one example."""
    seqs = [s[None, :] for s in example.sequences]
    probs, _ = _forward_batch(params, config, seqs, train_mode, rng)
    return probs[0]


def _stack(examples, class_index):
    n_seqs = len(examples[0].sequences)
    seqs = [
        np.stack([ex.sequences[k] for ex in examples]) for k in range(n_seqs)
    ]
    y = np.asarray([class_index[ex.label] for ex in examples], dtype=np.int64)
    return seqs, y


def _take(seqs, y, idx):
    return [s[idx] for s in seqs], y[idx]


@dataclass
class TrainConfig:
    lr: float = 0.001
    epochs: int = 25
    batch_size: int = 64
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class TrainResult:
    params: dict
    classes: list
    log: list
    best_epoch: int
    best_dev_accuracy: float
    diverged: bool = False


def _accuracy(params, config, seqs, y, batch_size=256):
    correct = 0
    n = len(y)
    for start in range(0, n, batch_size):
        idx = slice(start, min(start + batch_size, n))
        probs, _ = _forward_batch(params, config, [s[idx] for s in seqs])
        correct += int(np.sum(probs.argmax(axis=1) == y[idx]))
    return correct / n


def train(train_examples, dev_examples, config, hyper=None, classes=None,
          vocab=None, pretrained=None):
    """Adam on categorical cross-entropy; keeps the epoch-best dev params.

    If the loss goes non-finite the run stops early and returns the last
    finite checkpoint with ``diverged`` set.
    """
    hyper = hyper or TrainConfig()
    if not train_examples or not dev_examples:
        raise ValueError("need non-empty train and dev sets")
    if classes is None:
        classes = canonical_classes([ex.label for ex in train_examples])
    if len(classes) != config.n_classes:
        raise ValueError(f"{len(classes)} classes but config expects {config.n_classes}")
    class_index = {c: i for i, c in enumerate(classes)}
    train_seqs, train_y = _stack(train_examples, class_index)
    dev_seqs, dev_y = _stack(dev_examples, class_index)

    rng = np.random.default_rng(hyper.seed)
    params = init_params(config, hyper.seed, vocab=vocab, pretrained=pretrained)
    m_state = {k: np.zeros_like(v) for k, v in params.items()}
    v_state = {k: np.zeros_like(v) for k, v in params.items()}
    step = 0

    best = {"params": copy.deepcopy(params), "epoch": -1, "dev": -1.0}
    history = []
    diverged = False
    n = len(train_y)
    for epoch in range(hyper.epochs):
        perm = rng.permutation(n)
        losses = []
        for start in range(0, n, hyper.batch_size):
            idx = perm[start:start + hyper.batch_size]
            seqs, y = _take(train_seqs, train_y, idx)
            try:
                probs, cache = _forward_batch(params, config, seqs,
                                              train_mode=True, rng=rng)
            except NonFiniteError:
                diverged = True
                break
            loss = _cross_entropy(cache["logits"], y)
            if not math.isfinite(loss):
                diverged = True
                break
            losses.append(loss)
            grads = _backward_batch(params, config, cache, y)
            step += 1
            bc1 = 1.0 - hyper.beta1 ** step
            bc2 = 1.0 - hyper.beta2 ** step
            for key, grad in grads.items():
                m_state[key] = hyper.beta1 * m_state[key] + (1 - hyper.beta1) * grad
                v_state[key] = hyper.beta2 * v_state[key] + (1 - hyper.beta2) * grad * grad
                params[key] -= hyper.lr * (m_state[key] / bc1) / (
                    np.sqrt(v_state[key] / bc2) + hyper.eps
                )
        if diverged:
            log.warning("training diverged at epoch %d; keeping last checkpoint", epoch)
            break
        dev_acc = _accuracy(params, config, dev_seqs, dev_y)
        entry = {
            "epoch": epoch,
            "train_loss": float(np.mean(losses)) if losses else float("nan"),
            "dev_accuracy": dev_acc,
        }
        history.append(entry)
        if dev_acc > best["dev"]:
            best = {"params": copy.deepcopy(params), "epoch": epoch, "dev": dev_acc}
        log.info("epoch %d: loss %.4f, dev acc %.4f", epoch,
                 entry["train_loss"], dev_acc)

    return TrainResult(
        params=best["params"],
        classes=classes,
        log=history,
        best_epoch=best["epoch"],
        best_dev_accuracy=best["dev"],
        diverged=diverged,
    )


def overfit_steps(examples, config, classes, lr=0.01, max_steps=200, seed=0):
    """Full-batch Adam on a tiny set; returns the per-step loss trace."""
    class_index = {c: i for i, c in enumerate(classes)}
    seqs, y = _stack(examples, class_index)
    params = init_params(config, seed)
    m_state = {k: np.zeros_like(v) for k, v in params.items()}
    v_state = {k: np.zeros_like(v) for k, v in params.items()}
    trace = []
    for step in range(1, max_steps + 1):
        probs, cache = _forward_batch(params, config, seqs)
        loss = _cross_entropy(cache["logits"], y)
        trace.append(loss)
        if loss < 1e-4:
            break
        grads = _backward_batch(params, config, cache, y)
        bc1 = 1.0 - 0.9 ** step
        bc2 = 1.0 - 0.999 ** step
        for key, grad in grads.items():
            m_state[key] = 0.9 * m_state[key] + 0.1 * grad
            v_state[key] = 0.999 * v_state[key] + 0.001 * grad * grad
            params[key] -= lr * (m_state[key] / bc1) / (np.sqrt(v_state[key] / bc2) + 1e-8)
    return trace


def predict(params, config, examples, classes, batch_size=256):
    class_index = {c: i for i, c in enumerate(classes)}
    seqs, _ = _stack(
        [PairExample(ex.sequences, classes[0], ex.ku1, ex.ku2) for ex in examples],
        class_index,
    )
    out = []
    n = len(examples)
    for start in range(0, n, batch_size):
        idx = slice(start, min(start + batch_size, n))
        probs, _ = _forward_batch(params, config, [s[idx] for s in seqs])
        out.extend(classes[i] for i in probs.argmax(axis=1))
    return out


def gradient_check(params, config, example, classes, epsilon=1e-5, samples=200,
                   seed=0):
    """Max relative error between analytic and central-difference gradients.

    Coordinates are sampled from every parameter tensor.  The relative
    error uses |a - n| / max(1e-6, |a| + |n|); the floor keeps dead
    coordinates (zero both ways) from amplifying finite-difference noise.
    """
    rng = np.random.default_rng(seed)
    class_index = {c: i for i, c in enumerate(classes)}
    seqs, y = _stack([example], class_index)

    def loss_at(current):
        probs, cache = _forward_batch(current, config, seqs)
        return _cross_entropy(cache["logits"], y)

    _, cache = _forward_batch(params, config, seqs)
    grads = _backward_batch(params, config, cache, y)

    per_tensor = max(1, math.ceil(samples / len(params)))
    worst = 0.0
    for key in sorted(params):
        tensor = params[key]
        size = tensor.size
        count = min(per_tensor, size)
        flat_idx = rng.choice(size, size=count, replace=False)
        for fi in flat_idx:
            idx = np.unravel_index(fi, tensor.shape)
            original = tensor[idx]
            tensor[idx] = original + epsilon
            plus = loss_at(params)
            tensor[idx] = original - epsilon
            minus = loss_at(params)
            tensor[idx] = original
            numeric = (plus - minus) / (2.0 * epsilon)
            analytic = grads[key][idx]
            err = abs(analytic - numeric) / max(1e-6, abs(analytic) + abs(numeric))
            worst = max(worst, err)
    return worst


def save_model(path, params, config, classes, vocab, hyper=None):
    """Versioned binary: every tensor, the vocabulary, and a manifest."""
    manifest = {
        "version": 1,
        "config": {
            "vocab_size": config.vocab_size,
            "emb_dim": config.emb_dim,
            "hidden": config.hidden,
            "dense_units": config.dense_units,
            "n_classes": config.n_classes,
            "n_parts": config.n_parts,
            "lengths": list(config.lengths),
            "dropout": config.dropout,
        },
        "classes": list(classes),
        "vocab": vocab.terms,
        "hyper": hyper or {},
    }
    buffer = io.BytesIO()
    arrays = {key.replace(".", "__"): value for key, value in params.items()}
    np.savez(buffer, manifest=np.frombuffer(
        json.dumps(manifest).encode("utf-8"), dtype=np.uint8), **arrays)
    with open(path, "wb") as fh:
        fh.write(buffer.getvalue())


def load_model(path):
    with np.load(path) as blob:
        manifest = json.loads(bytes(blob["manifest"]).decode("utf-8"))
        params = {
            key.replace("__", "."): blob[key]
            for key in blob.files
            if key != "manifest"
        }
    spec = manifest["config"]
    config = NetworkConfig(
        vocab_size=spec["vocab_size"],
        emb_dim=spec["emb_dim"],
        hidden=spec["hidden"],
        dense_units=spec["dense_units"],
        n_classes=spec["n_classes"],
        n_parts=spec["n_parts"],
        lengths=tuple(spec["lengths"]),
        dropout=spec["dropout"],
    )
    vocab = Vocab(terms=manifest["vocab"],
                  id_of={t: i for i, t in enumerate(manifest["vocab"])})
    return params, config, manifest["classes"], vocab, manifest.get("hyper", {})
