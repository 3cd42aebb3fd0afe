"""Shapley value solvers for games given as ``v(mask) -> float``.

A coalition is an integer bitmask over ``n`` players: bit ``i`` set means
player ``i`` is present.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import CapacityError, InputError, NumericalError

Game = Callable[[int], float]

MAX_EXACT_PLAYERS = 20
MAX_PLAYERS = 63
# condition number above which the regularized normal equations are rejected
MAX_CONDITION = 1e12


def popcounts(n: int) -> np.ndarray:
    masks = np.arange(1 << n, dtype=np.int64)
    counts = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        counts += (masks >> i) & 1
    return counts


def tabulate(game: Game, n: int, map_fn=map) -> np.ndarray:
    """Evaluate ``game`` on all ``2**n`` coalitions; ``map_fn`` may be a pool's map."""
    return np.fromiter(map_fn(game, range(1 << n)), dtype=np.float64, count=1 << n)


def shapley_from_table(values: np.ndarray) -> np.ndarray:
    """Exact Shapley values from a fully tabulated game (``len(values) == 2**n``)."""
    n = int(values.size).bit_length() - 1
    if values.size != 1 << n:
        raise InputError(f"game table of size {values.size} is not a power of two")
    sizes = popcounts(n)
    # weight of a coalition S not containing i: |S|! (n-|S|-1)! / n!
    w = np.array([math.factorial(s) * math.factorial(n - s - 1) / math.factorial(n)
                  for s in range(n)] + [0.0])
    masks = np.arange(1 << n, dtype=np.int64)
    phi = np.empty(n)
    for i in range(n):
        without = masks[((masks >> i) & 1) == 0]
        phi[i] = np.dot(w[sizes[without]], values[without | (1 << i)] - values[without])
    return phi


def exact_shapley(game: Game, n: int, threshold: int = 12, map_fn=map) -> np.ndarray:
    """Shapley values by full enumeration of all ``2**n`` coalitions."""
    if n < 1:
        raise InputError("a game needs at least one player")
    if n > threshold:
        raise CapacityError(
            f"{n} players exceeds the exact enumeration threshold of {threshold}; "
            "use the kernel method instead"
        )
    return shapley_from_table(tabulate(game, n, map_fn))


def kernel_weight(n: int, size: int) -> float:
    return (n - 1) / (math.comb(n, size) * size * (n - size))


@dataclass
class KernelDiagnostics:
    mode: str  # "full" or "sampled"
    n_coalitions: int
    n_evaluations: int
    condition: float
    seed: int | None = None


def _sample_coalitions(n: int, n_samples: int, rng: np.random.Generator) -> dict[int, float]:
    """Draw coalitions in complementary pairs and weight them for regression.

    Pairs are drawn with probability proportional to their Shapley-kernel
    mass. Each distinct coalition gets ``kernel(S) / P(S drawn at least once)``,
    which makes the weighted normal equations an unbiased estimate of the
    fully enumerated ones.
    """
    sizes = np.arange(1, n)
    mass = np.array([(n - 1) / (s * (n - s)) for s in sizes])
    p_size = mass / mass.sum()
    draws = max(1, n_samples // 2)
    full = (1 << n) - 1
    seen: set[int] = set()
    for _ in range(draws):
        s = int(rng.choice(sizes, p=p_size))
        members = rng.choice(n, size=s, replace=False)
        mask = int(np.bitwise_or.reduce(np.left_shift(1, members)))
        seen.add(mask)
        seen.add(full ^ mask)
    weights = {}
    for mask in seen:
        s = bin(mask).count("1")
        # a draw hits {S, complement of S} with probability 2 P(S)
        p_pair = 2.0 * p_size[s - 1] / math.comb(n, s)
        p_incl = -math.expm1(draws * math.log1p(-min(p_pair, 1.0))) if p_pair < 1.0 else 1.0
        weights[mask] = kernel_weight(n, s) / p_incl
    return weights


def kernel_shap(game: Game, n: int, *, samples: int = 2048, ridge: float = 1e-6,
                seed: int = 0, threshold: int = 12, full: bool | None = None,
                map_fn=map) -> tuple[np.ndarray, KernelDiagnostics]:
    """Kernel SHAP: Shapley-kernel weighted least squares with efficiency enforced.

    The efficiency constraint is eliminated by substituting out the last
    player. With ``full=None`` every proper coalition is enumerated when
    ``n <= threshold``, otherwise ``samples`` coalitions are drawn with the
    given seed. Only the sampled system gets the ``ridge`` term; the enumerated
    one is always well conditioned and a ridge would bias it by ``ridge * |phi|``.
    """
    if n < 2:
        raise InputError("kernel SHAP needs at least two players")
    if n > MAX_PLAYERS:
        raise CapacityError(f"at most {MAX_PLAYERS} players are supported, got {n}")
    if full is None:
        full = n <= threshold
    grand = (1 << n) - 1
    if full:
        coalitions = list(range(1, grand))
        weights = np.array([kernel_weight(n, bin(m).count("1")) for m in coalitions])
    else:
        if samples < 2 * n:
            raise InputError(f"kernel sampling needs at least {2 * n} samples, got {samples}")
        sampled = _sample_coalitions(n, samples, np.random.default_rng(seed))
        coalitions = sorted(sampled)
        weights = np.array([sampled[m] for m in coalitions])

    values = np.fromiter(map_fn(game, [0, grand, *coalitions]), dtype=np.float64)
    v_empty, v_full = values[0], values[1]
    y = values[2:] - v_empty
    delta = v_full - v_empty

    Z = ((np.array(coalitions, dtype=np.int64)[:, None] >> np.arange(n)) & 1).astype(np.float64)
    X = Z[:, :-1] - Z[:, -1:]
    target = y - Z[:, -1] * delta
    A = X.T @ (X * weights[:, None])
    if not full:
        A += ridge * np.eye(n - 1)
    b = X.T @ (weights * target)
    condition = float(np.linalg.cond(A))
    if not np.isfinite(condition) or condition > MAX_CONDITION:
        raise NumericalError(
            f"kernel regression is singular (condition number {condition:.3g}) with "
            f"{len(coalitions)} distinct coalitions over {n} players",
            condition=condition,
        )
    beta = np.linalg.solve(A, b)
    phi = np.append(beta, delta - beta.sum())
    diag = KernelDiagnostics("full" if full else "sampled", len(coalitions),
                             len(coalitions) + 2, condition, None if full else seed)
    return phi, diag


def aggregate_phrase(word_values: Sequence[float]) -> float:
    """Phrase score as the plain sum of its words' attributions."""
    total = 0.0
    for v in word_values:
        total += float(v)
    return total


def aggregate_layers(per_layer: Mapping[str, Sequence[float]] | Sequence[Sequence[float]]) -> np.ndarray:
    """Elementwise sum of per-layer attribution vectors, in the given order."""
    vectors = list(per_layer.values()) if isinstance(per_layer, Mapping) else list(per_layer)
    if not vectors:
        raise InputError("no layer vectors to aggregate")
    arrays = [np.asarray(v, dtype=np.float64) for v in vectors]
    m = arrays[0].shape
    for a in arrays:
        if a.ndim != 1 or a.shape != m:
            raise InputError(f"layer vectors differ in length: {[x.shape for x in arrays]}")
    total = arrays[0].copy()
    for a in arrays[1:]:
        total = total + a
    return total
