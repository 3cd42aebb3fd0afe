"""Cross-entropy training of the toy classifier with hand-written backprop."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DivergenceError, InputError, ParseError
from .model import (
    LN_EPS,
    ModelWeights,
    _GELU_C,
    embed,
    forward,
    parameter_shapes,
    softmax,
)

log = logging.getLogger(__name__)

LABELS = {"neg": 0, "pos": 1, "negative": 0, "positive": 1}


@dataclass(frozen=True)
class Example:
    ids: tuple[int, ...]
    label: int


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.002
    momentum: float = 0.9
    epochs: int = 20
    batch_size: int = 8
    seed: int = 0


@dataclass
class TrainResult:
    weights: ModelWeights
    losses: list[float] = field(default_factory=list)
    accuracies: list[float] = field(default_factory=list)


def read_corpus(source: str) -> list[tuple[str, str]]:
    """Parse ``label<TAB>sentence`` lines; blank lines and ``#`` comments skipped."""
    rows = []
    for lineno, raw in enumerate(source.splitlines(), 1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        if "\t" not in raw:
            raise ParseError(f"corpus line {lineno}: expected 'label<TAB>sentence'")
        label, sentence = raw.split("\t", 1)
        if label.strip().lower() not in LABELS:
            raise ParseError(f"corpus line {lineno}: unknown label {label!r}")
        rows.append((label.strip().lower(), sentence.strip()))
    return rows


def corpus_examples(rows, vocab) -> list[Example]:
    from .tokenizer import tokenize

    return [Example(tuple(tokenize(sentence, vocab).ids), LABELS[label]) for label, sentence in rows]


# -- backprop -----------------------------------------------------------------

def _ln_forward(x, gain, bias):
    mu = x.mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(((x - mu) ** 2).mean(axis=-1, keepdims=True) + LN_EPS)
    xhat = (x - mu) * inv
    return xhat * gain + bias, (xhat, inv, gain)


def _ln_backward(dy, cache):
    xhat, inv, gain = cache
    dgain = (dy * xhat).sum(axis=0)
    dbias = dy.sum(axis=0)
    dxhat = dy * gain
    dx = inv * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
    return dx, dgain, dbias


def _gelu_forward(x):
    u = _GELU_C * (x + 0.044715 * x ** 3)
    t = np.tanh(u)
    return 0.5 * x * (1.0 + t), (x, t)


def _gelu_backward(dy, cache):
    x, t = cache
    du = _GELU_C * (1.0 + 3 * 0.044715 * x ** 2)
    return dy * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t ** 2) * du)


def _block_forward(p, h, n_heads):
    T, d = h.shape
    dh = d // n_heads
    a, ln1 = _ln_forward(h, p["ln1.gain"], p["ln1.bias"])

    def heads(x):
        return x.reshape(T, n_heads, dh).transpose(1, 0, 2)

    q = heads(a @ p["attn.wq"] + p["attn.bq"])
    k = heads(a @ p["attn.wk"])
    v = heads(a @ p["attn.wv"] + p["attn.bv"])
    scale = 1.0 / math.sqrt(dh)
    P = softmax(q @ k.transpose(0, 2, 1) * scale)
    ctx = (P @ v).transpose(1, 0, 2).reshape(T, d)
    h1 = h + ctx @ p["attn.wo"] + p["attn.bo"]
    b, ln2 = _ln_forward(h1, p["ln2.gain"], p["ln2.bias"])
    z = b @ p["ffn.w1"] + p["ffn.b1"]
    g, gc = _gelu_forward(z)
    out = h1 + g @ p["ffn.w2"] + p["ffn.b2"]
    cache = dict(a=a, ln1=ln1, q=q, k=k, v=v, P=P, ctx=ctx, b=b, ln2=ln2, g=g, gc=gc, scale=scale)
    return out, cache


def _block_backward(p, dout, c, n_heads):
    T, d = dout.shape
    dh = d // n_heads
    grads = {}
    # feed-forward branch
    grads["ffn.w2"] = c["g"].T @ dout
    grads["ffn.b2"] = dout.sum(axis=0)
    dz = _gelu_backward(dout @ p["ffn.w2"].T, c["gc"])
    grads["ffn.w1"] = c["b"].T @ dz
    grads["ffn.b1"] = dz.sum(axis=0)
    dh1_ln, grads["ln2.gain"], grads["ln2.bias"] = _ln_backward(dz @ p["ffn.w1"].T, c["ln2"])
    dh1 = dout + dh1_ln
    # attention branch
    grads["attn.wo"] = c["ctx"].T @ dh1
    grads["attn.bo"] = dh1.sum(axis=0)
    dctx = (dh1 @ p["attn.wo"].T).reshape(T, n_heads, dh).transpose(1, 0, 2)
    P, q, k, v = c["P"], c["q"], c["k"], c["v"]
    dP = dctx @ v.transpose(0, 2, 1)
    dv = P.transpose(0, 2, 1) @ dctx
    dS = P * (dP - (dP * P).sum(axis=-1, keepdims=True)) * c["scale"]
    dq = dS @ k
    dk = dS.transpose(0, 2, 1) @ q

    def merge(x):
        return x.transpose(1, 0, 2).reshape(T, d)

    dq, dk, dv = merge(dq), merge(dk), merge(dv)
    a = c["a"]
    da = np.zeros_like(a)
    for name, dx in (("q", dq), ("k", dk), ("v", dv)):
        grads[f"attn.w{name}"] = a.T @ dx
        if name != "k":
            grads[f"attn.b{name}"] = dx.sum(axis=0)
        da += dx @ p[f"attn.w{name}"].T
    dh_ln, grads["ln1.gain"], grads["ln1.bias"] = _ln_backward(da, c["ln1"])
    return dh1 + dh_ln, grads


def loss_and_grads(weights: ModelWeights, ids: Sequence[int], label: int):
    """Cross-entropy loss of one sentence and its gradient for every parameter."""
    cfg = weights.config
    h = embed(weights, ids)
    caches = []
    for l in range(cfg.n_layers):
        h, cache = _block_forward(weights.layer(l), h, cfg.n_heads)
        caches.append(cache)
    logits = h[0] @ weights["cls.weight"] + weights["cls.bias"]
    probs = softmax(logits)
    loss = -math.log(max(probs[label], 1e-300))

    grads = {}
    dlogits = probs.copy()
    dlogits[label] -= 1.0
    grads["cls.weight"] = np.outer(h[0], dlogits)
    grads["cls.bias"] = dlogits
    dh = np.zeros_like(h)
    dh[0] = weights["cls.weight"] @ dlogits
    for l in reversed(range(cfg.n_layers)):
        dh, g = _block_backward(weights.layer(l), dh, caches[l], cfg.n_heads)
        for name, value in g.items():
            grads[f"layers.{l}.{name}"] = value
    dtok = np.zeros_like(weights["tok_emb"])
    np.add.at(dtok, np.asarray(ids), dh)
    dpos = np.zeros_like(weights["pos_emb"])
    dpos[: len(ids)] = dh
    grads["tok_emb"] = dtok
    grads["pos_emb"] = dpos
    return loss, grads


def batch_loss_and_grads(weights: ModelWeights, batch: Sequence[Example]):
    total = 0.0
    acc = {name: np.zeros(shape) for name, shape in parameter_shapes(weights.config).items()}
    for ex in batch:
        loss, grads = loss_and_grads(weights, ex.ids, ex.label)
        total += loss
        for name, g in grads.items():
            acc[name] += g
    n = len(batch)
    return total / n, {name: g / n for name, g in acc.items()}


def accuracy(weights: ModelWeights, examples: Sequence[Example]) -> float:
    hits = sum(int(np.argmax(forward(weights, ex.ids).logits) == ex.label) for ex in examples)
    return hits / len(examples)


def train_classifier(weights: ModelWeights, corpus: Sequence[Example],
                     hyper: TrainConfig = TrainConfig()) -> TrainResult:
    """Mini-batch gradient descent with momentum; the input weights are not modified."""
    if not corpus:
        raise InputError("training corpus is empty")
    for ex in corpus:
        if ex.label not in (0, 1):
            raise InputError(f"label must be 0 or 1, got {ex.label!r}")
    rng = np.random.default_rng(hyper.seed)
    w = weights.copy()
    velocity = {name: np.zeros_like(p) for name, p in w.params.items()}
    result = TrainResult(w)
    for epoch in range(1, hyper.epochs + 1):
        order = rng.permutation(len(corpus))
        epoch_loss = 0.0
        for start in range(0, len(order), hyper.batch_size):
            batch = [corpus[i] for i in order[start : start + hyper.batch_size]]
            loss, grads = batch_loss_and_grads(w, batch)
            if not math.isfinite(loss):
                raise DivergenceError(epoch, loss)
            epoch_loss += loss * len(batch)
            for name, g in grads.items():
                velocity[name] = hyper.momentum * velocity[name] + g
                w.params[name] -= hyper.learning_rate * velocity[name]
        epoch_loss /= len(corpus)
        if not math.isfinite(epoch_loss):
            raise DivergenceError(epoch, epoch_loss)
        result.losses.append(epoch_loss)
        result.accuracies.append(accuracy(w, corpus))
        log.debug("epoch %d loss %.5f acc %.3f", epoch, epoch_loss, result.accuracies[-1])
    return result
