"""Independent reference implementations used as test oracles.

Nothing here imports the package's numerical code.
"""

import itertools
import math


def permutation_shapley(game, n):
    """Average marginal contribution over all n! orderings."""
    phi = [0.0] * n
    perms = list(itertools.permutations(range(n)))
    for order in perms:
        mask = 0
        prev = game(mask)
        for i in order:
            mask |= 1 << i
            cur = game(mask)
            phi[i] += cur - prev
            prev = cur
    return [p / len(perms) for p in phi]


# Hand-set single-block model: vocab 3, d_model 2, 1 head, d_ff 2, max_len 2.
TINY = {
    "tok_emb": [[0.5, -0.25], [1.0, 0.75], [-0.5, 0.5]],
    "pos_emb": [[0.125, 0.0], [0.0, -0.125]],
    "layers.0.ln1.gain": [1.0, 0.5],
    "layers.0.ln1.bias": [0.0, 0.25],
    "layers.0.attn.wq": [[0.5, -1.0], [0.25, 0.75]],
    "layers.0.attn.bq": [0.1, -0.2],
    "layers.0.attn.wk": [[1.0, 0.5], [-0.5, 0.25]],
    "layers.0.attn.wv": [[0.75, 0.0], [0.5, -0.5]],
    "layers.0.attn.bv": [0.0, 0.1],
    "layers.0.attn.wo": [[1.0, -0.5], [0.25, 1.0]],
    "layers.0.attn.bo": [0.05, 0.0],
    "layers.0.ln2.gain": [0.75, 1.25],
    "layers.0.ln2.bias": [-0.1, 0.1],
    "layers.0.ffn.w1": [[0.5, -0.75], [1.0, 0.25]],
    "layers.0.ffn.b1": [0.0, 0.2],
    "layers.0.ffn.w2": [[-0.5, 1.0], [0.75, 0.5]],
    "layers.0.ffn.b2": [0.1, -0.1],
    "cls.weight": [[1.0, -1.0], [0.5, 2.0]],
    "cls.bias": [0.25, -0.25],
}


def _vecmat(v, m):
    return [sum(v[k] * m[k][j] for k in range(len(v))) for j in range(len(m[0]))]


def _add(a, b):
    return [x + y for x, y in zip(a, b)]


def _ln(x, gain, bias, eps=1e-5):
    mu = sum(x) / len(x)
    var = sum((v - mu) ** 2 for v in x) / len(x)
    return [(v - mu) / math.sqrt(var + eps) * g + b for v, g, b in zip(x, gain, bias)]


def _gelu(x):
    return 0.5 * x * (1.0 + math.tanh(math.sqrt(2.0 / math.pi) * (x + 0.044715 * x ** 3)))


def tiny_forward(ids, w=TINY):
    """Step-by-step arithmetic for the hand-set model. Returns (logits, attention rows)."""
    p = "layers.0."
    h = [_add(w["tok_emb"][t], w["pos_emb"][i]) for i, t in enumerate(ids)]
    a = [_ln(x, w[p + "ln1.gain"], w[p + "ln1.bias"]) for x in h]
    q = [_add(_vecmat(x, w[p + "attn.wq"]), w[p + "attn.bq"]) for x in a]
    k = [_vecmat(x, w[p + "attn.wk"]) for x in a]
    v = [_add(_vecmat(x, w[p + "attn.wv"]), w[p + "attn.bv"]) for x in a]
    scale = math.sqrt(2)
    rows = []
    for i in range(len(ids)):
        s = [sum(qi * kj for qi, kj in zip(q[i], k[j])) / scale for j in range(len(ids))]
        m = max(s)
        e = [math.exp(x - m) for x in s]
        rows.append([x / sum(e) for x in e])
    ctx = [[sum(rows[i][j] * v[j][c] for j in range(len(ids))) for c in range(2)] for i in range(len(ids))]
    h = [_add(h[i], _add(_vecmat(ctx[i], w[p + "attn.wo"]), w[p + "attn.bo"])) for i in range(len(ids))]
    out = []
    for x in h:
        b = _ln(x, w[p + "ln2.gain"], w[p + "ln2.bias"])
        f = [_gelu(z) for z in _add(_vecmat(b, w[p + "ffn.w1"]), w[p + "ffn.b1"])]
        out.append(_add(x, _add(_vecmat(f, w[p + "ffn.w2"]), w[p + "ffn.b2"])))
    logits = _add(_vecmat(out[0], w["cls.weight"]), w["cls.bias"])
    return logits, rows
