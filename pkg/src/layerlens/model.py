"""A small, fully instrumented transformer encoder sentiment classifier.

Pre-norm residual blocks, learned absolute positions, a linear classifier on
the CLS position, float64 throughout. Every internal surface the explainer
intervenes on (embedding output, block outputs, attention) is returned in a
:class:`ForwardTrace`.

PAD positions are not attention-masked; a PAD token takes part in attention
like any other token. Keys carry no bias: a key bias only shifts every score in
a query row by the same amount, which softmax cancels.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, FormatError, InputError

POSITIVE = 1
NEGATIVE = 0
LN_EPS = 1e-5
_GELU_C = math.sqrt(2.0 / math.pi)

FORMAT_MAGIC = "layerlens-weights/1"


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    d_model: int = 32
    n_heads: int = 4
    n_layers: int = 2
    d_ff: int = 64
    max_len: int = 64
    n_classes: int = 2

    def validate(self):
        for name in ("vocab_size", "d_model", "n_heads", "n_layers", "d_ff", "max_len", "n_classes"):
            value = getattr(self, name)
            if not isinstance(value, int) or value <= 0:
                raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")
        if self.d_model % self.n_heads:
            raise ConfigurationError(
                f"d_model={self.d_model} is not divisible by n_heads={self.n_heads}"
            )
        if self.n_classes != 2:
            raise ConfigurationError("only binary (negative/positive) classifiers are supported")
        return self

    @property
    def d_head(self):
        return self.d_model // self.n_heads


def parameter_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Ordered mapping of parameter name to shape."""
    d, f = config.d_model, config.d_ff
    shapes = {
        "tok_emb": (config.vocab_size, d),
        "pos_emb": (config.max_len, d),
    }
    for l in range(config.n_layers):
        p = f"layers.{l}."
        shapes.update({
            p + "ln1.gain": (d,), p + "ln1.bias": (d,),
            p + "attn.wq": (d, d), p + "attn.bq": (d,),
            p + "attn.wk": (d, d),
            p + "attn.wv": (d, d), p + "attn.bv": (d,),
            p + "attn.wo": (d, d), p + "attn.bo": (d,),
            p + "ln2.gain": (d,), p + "ln2.bias": (d,),
            p + "ffn.w1": (d, f), p + "ffn.b1": (f,),
            p + "ffn.w2": (f, d), p + "ffn.b2": (d,),
        })
    shapes["cls.weight"] = (d, config.n_classes)
    shapes["cls.bias"] = (config.n_classes,)
    return shapes


@dataclass
class ModelWeights:
    config: ModelConfig
    params: dict[str, np.ndarray]

    def __getitem__(self, name):
        return self.params[name]

    def copy(self) -> "ModelWeights":
        return ModelWeights(self.config, {k: v.copy() for k, v in self.params.items()})

    def layer(self, l: int) -> dict[str, np.ndarray]:
        prefix = f"layers.{l}."
        return {k[len(prefix):]: v for k, v in self.params.items() if k.startswith(prefix)}

    def fingerprint(self) -> str:
        h = hashlib.sha256(json.dumps(asdict(self.config), sort_keys=True).encode())
        for name in parameter_shapes(self.config):
            h.update(name.encode())
            h.update(np.ascontiguousarray(self.params[name], dtype="<f8").tobytes())
        return h.hexdigest()


def init_weights(config: ModelConfig, seed: int) -> ModelWeights:
    """Seeded initialization: matrices ~ N(0, 1/fan_in), gains 1, biases 0.

    For the embedding tables the fan-in is taken as ``d_model``.
    """
    config.validate()
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in parameter_shapes(config).items():
        if name.endswith(".gain"):
            params[name] = np.ones(shape)
        elif len(shape) == 1:
            params[name] = np.zeros(shape)
        else:
            fan_in = config.d_model if name in ("tok_emb", "pos_emb") else shape[0]
            params[name] = rng.standard_normal(shape) / math.sqrt(fan_in)
    return ModelWeights(config, params)


# -- primitives ---------------------------------------------------------------

def layer_norm(x, gain, bias):
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    xhat = (x - mu) / np.sqrt(var + LN_EPS)
    return xhat * gain + bias


def gelu(x):
    return 0.5 * x * (1.0 + np.tanh(_GELU_C * (x + 0.044715 * x ** 3)))


def softmax(x, axis=-1):
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def block_forward(p: dict, h: np.ndarray, n_heads: int):
    """One pre-norm encoder block. Returns (output, attention[H, T, T])."""
    T, d = h.shape
    dh = d // n_heads
    a = layer_norm(h, p["ln1.gain"], p["ln1.bias"])
    q = (a @ p["attn.wq"] + p["attn.bq"]).reshape(T, n_heads, dh).transpose(1, 0, 2)
    k = (a @ p["attn.wk"]).reshape(T, n_heads, dh).transpose(1, 0, 2)
    v = (a @ p["attn.wv"] + p["attn.bv"]).reshape(T, n_heads, dh).transpose(1, 0, 2)
    attn = softmax(q @ k.transpose(0, 2, 1) / math.sqrt(dh))
    ctx = (attn @ v).transpose(1, 0, 2).reshape(T, d)
    h = h + ctx @ p["attn.wo"] + p["attn.bo"]
    b = layer_norm(h, p["ln2.gain"], p["ln2.bias"])
    h = h + gelu(b @ p["ffn.w1"] + p["ffn.b1"]) @ p["ffn.w2"] + p["ffn.b2"]
    return h, attn


# -- forward passes -----------------------------------------------------------

@dataclass
class ForwardTrace:
    embedding_out: np.ndarray  # (T, d)
    hidden: list[np.ndarray]  # per block output, (T, d)
    attention: np.ndarray  # (n_layers, n_heads, T, T)
    logits: np.ndarray  # (n_classes,)
    prob_positive: float = field(init=False)

    def __post_init__(self):
        self.prob_positive = float(softmax(self.logits)[POSITIVE])

    @property
    def log_odds_positive(self) -> float:
        return float(self.logits[POSITIVE] - self.logits[NEGATIVE])


def classify(weights: ModelWeights, h: np.ndarray) -> np.ndarray:
    return h[0] @ weights["cls.weight"] + weights["cls.bias"]


def embed(weights: ModelWeights, ids: Sequence[int]) -> np.ndarray:
    ids = np.asarray(ids)
    cfg = weights.config
    if ids.ndim != 1 or len(ids) == 0:
        raise InputError("token ids must be a non-empty 1-d sequence")
    if len(ids) > cfg.max_len:
        raise InputError(f"sequence of {len(ids)} tokens exceeds max_len={cfg.max_len}")
    if ids.min() < 0 or ids.max() >= cfg.vocab_size:
        raise InputError(f"token id outside vocabulary of size {cfg.vocab_size}")
    return weights["tok_emb"][ids] + weights["pos_emb"][: len(ids)]


def forward_from_embeddings(weights: ModelWeights, embeddings: np.ndarray) -> ForwardTrace:
    cfg = weights.config
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if embeddings.ndim != 2 or embeddings.shape[1] != cfg.d_model:
        raise InputError(f"embedding override must be (T, {cfg.d_model}), got {embeddings.shape}")
    if not 0 < embeddings.shape[0] <= cfg.max_len:
        raise InputError(f"embedding override length {embeddings.shape[0]} outside 1..{cfg.max_len}")
    h = embeddings
    hidden, attention = [], []
    for l in range(cfg.n_layers):
        h, attn = block_forward(weights.layer(l), h, cfg.n_heads)
        hidden.append(h)
        attention.append(attn)
    return ForwardTrace(embeddings, hidden, np.stack(attention), classify(weights, h))


def forward(weights: ModelWeights, ids: Sequence[int]) -> ForwardTrace:
    return forward_from_embeddings(weights, embed(weights, ids))


def forward_with_hidden_override(weights: ModelWeights, layer: int, hidden: np.ndarray):
    """Resume computation from a replacement output of block ``layer``.

    Returns ``(logits, prob_positive)``.
    """
    cfg = weights.config
    if not (isinstance(layer, (int, np.integer)) and 0 <= layer < cfg.n_layers):
        raise InputError(f"layer index {layer!r} outside 0..{cfg.n_layers - 1}")
    h = np.asarray(hidden, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != cfg.d_model or not 0 < h.shape[0] <= cfg.max_len:
        raise InputError(f"hidden override must be (T, {cfg.d_model}), got {h.shape}")
    for l in range(layer + 1, cfg.n_layers):
        h, _ = block_forward(weights.layer(l), h, cfg.n_heads)
    logits = classify(weights, h)
    return logits, float(softmax(logits)[POSITIVE])


# -- weight documents ---------------------------------------------------------

def save_weights(weights: ModelWeights, config: ModelConfig | None = None) -> str:
    """Serialize to a line-oriented text document.

    Layout: a magic line, a ``config`` line holding JSON, then per parameter a
    ``param <name> <dims...>`` header followed by its rows in row-major order,
    and a closing ``end`` line. Floats use ``repr`` so they round-trip exactly.
    """
    config = config or weights.config
    lines = [FORMAT_MAGIC, "config " + json.dumps(asdict(config), sort_keys=True)]
    for name, shape in parameter_shapes(config).items():
        arr = weights.params[name]
        if arr.shape != shape:
            raise FormatError(f"parameter {name} has shape {arr.shape}, config implies {shape}")
        lines.append(f"param {name} " + " ".join(map(str, shape)))
        rows = arr.reshape(shape[0], -1) if arr.ndim > 1 else arr.reshape(1, -1)
        lines.extend(" ".join(repr(float(x)) for x in row) for row in rows)
    lines.append("end")
    return "\n".join(lines) + "\n"


def load_weights(document: str) -> tuple[ModelConfig, ModelWeights]:
    lines = document.splitlines()
    if not lines or lines[0].strip() != FORMAT_MAGIC:
        raise FormatError(f"missing header line {FORMAT_MAGIC!r}")
    if len(lines) < 2 or not lines[1].startswith("config "):
        raise FormatError("missing 'config' line")
    try:
        raw = json.loads(lines[1][len("config "):])
        config = ModelConfig(**raw).validate()
    except (json.JSONDecodeError, TypeError, ConfigurationError) as exc:
        raise FormatError(f"invalid config field: {exc}") from None
    expected = parameter_shapes(config)
    params = {}
    pos = 2
    for name, shape in expected.items():
        if pos >= len(lines):
            raise FormatError(f"document truncated before parameter {name}")
        head = lines[pos].split()
        if len(head) < 2 or head[0] != "param" or head[1] != name:
            raise FormatError(f"expected parameter {name}, found {lines[pos][:60]!r}")
        declared = tuple(int(x) for x in head[2:])
        if declared != shape:
            raise FormatError(f"parameter {name} declares shape {declared}, config implies {shape}")
        n_rows = shape[0] if len(shape) > 1 else 1
        body = lines[pos + 1 : pos + 1 + n_rows]
        if len(body) != n_rows:
            raise FormatError(f"document truncated inside parameter {name}")
        try:
            values = np.array([float(x) for row in body for x in row.split()])
        except ValueError:
            raise FormatError(f"non-numeric value in parameter {name}") from None
        if values.size != math.prod(shape):
            raise FormatError(f"parameter {name} has {values.size} values, expected {math.prod(shape)}")
        if not np.all(np.isfinite(values)):
            raise FormatError(f"parameter {name} contains non-finite values")
        params[name] = values.reshape(shape)
        pos += 1 + n_rows
    if pos >= len(lines) or lines[pos].strip() != "end":
        raise FormatError("document truncated: missing 'end' line")
    return config, ModelWeights(config, params)


def read_weights(path) -> ModelWeights:
    with open(path, encoding="utf-8") as fh:
        return load_weights(fh.read())[1]
