"""Parallel fusion baselines: max rule, sum rule and context-weighted sum (CWMA).

All three fuse one normalized score per classifier taken at a single instant.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

from .core import ConfigError
from .metrics import eer_rows


def _scores(normalized_scores, rule: str) -> np.ndarray:
    arr = np.asarray(normalized_scores, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] == 0:
        raise ValueError(f"{rule} rule needs at least one score")
    return arr


def _out(value):
    return float(value) if np.ndim(value) == 0 else value


def fuse_max(normalized_scores):
    """Largest score; a 2-D input is fused row by row."""
    return _out(np.max(_scores(normalized_scores, "max"), axis=-1))


def fuse_sum(normalized_scores):
    """Sum of scores; a 2-D input is fused row by row.

    Summing in sorted order makes the result exactly permutation invariant.
    """
    return _out(np.sort(_scores(normalized_scores, "sum"), axis=-1).sum(axis=-1))


@dataclass(frozen=True)
class CwmaWeights:
    """Weight in [0, 1] per (context, classifier)."""

    weights: Mapping[Tuple[str, str], float]

    def __post_init__(self):
        for key, w in self.weights.items():
            if not 0.0 <= w <= 1.0:
                raise ConfigError(f"CWMA weight {key} = {w} outside [0, 1]")

    def get(self, context: str, cid: str) -> float:
        try:
            return self.weights[(context, cid)]
        except KeyError:
            raise ConfigError(f"no CWMA weight for classifier {cid!r} in context {context!r}") from None

    def vector(self, context: str, cids: Sequence[str]) -> np.ndarray:
        return np.array([self.get(context, c) for c in cids])

    def to_dict(self) -> Dict[str, Dict[str, float]]:
        out: Dict[str, Dict[str, float]] = {}
        for (ctx, cid), w in sorted(self.weights.items()):
            out.setdefault(ctx, {})[cid] = w
        return out


def cwma_fuse(weights: CwmaWeights, context: str, scores: Mapping[str, float]) -> float:
    return sum(weights.get(context, cid) * s for cid, s in sorted(scores.items()))


def weight_grid(k: int, grid_step: float) -> np.ndarray:
    """All vectors in ``{0, step, ..., 1}^k`` in lexicographic order, shape ``(n^k, k)``."""
    n = round(1.0 / grid_step)
    if n < 1 or abs(n * grid_step - 1.0) > 1e-9:
        raise ValueError(f"grid_step must divide 1 evenly, got {grid_step}")
    levels = np.arange(n + 1) / n
    return np.array(list(itertools.product(levels, repeat=k)), dtype=float).reshape(-1, k)


def grid_eers(genuine: np.ndarray, impostor: np.ndarray, grid: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """Training EER for every weight vector in ``grid``.

    ``genuine`` and ``impostor`` are ``(n_trials, k)`` normalized score matrices.
    """
    out = np.empty(len(grid))
    for lo in range(0, len(grid), chunk):
        w = grid[lo:lo + chunk]
        out[lo:lo + chunk] = eer_rows(w @ genuine.T, w @ impostor.T)
    return out


def cwma_train_context(genuine: np.ndarray, impostor: np.ndarray, grid_step: float = 0.02) -> Tuple[np.ndarray, float]:
    """Grid minimizer of training EER for one context, with its EER.

    Ties go to the lexicographically smallest weight vector, which is the
    first minimizer in grid order.
    """
    genuine = np.asarray(genuine, dtype=float)
    impostor = np.asarray(impostor, dtype=float)
    if genuine.size == 0 or impostor.size == 0:
        raise ValueError("CWMA training needs genuine and impostor trials")
    grid = weight_grid(genuine.shape[1], grid_step)
    eers = grid_eers(genuine, impostor, grid)
    best = int(np.argmin(eers))
    return grid[best], float(eers[best])


def cwma_train(
    training: Mapping[str, Tuple[np.ndarray, np.ndarray]],
    cids: Sequence[str],
    grid_step: float = 0.02,
) -> CwmaWeights:
    """Train per-context weights.

    ``training`` maps context -> (genuine, impostor) matrices whose columns
    follow ``cids``.
    """
    if not training:
        raise ValueError("empty CWMA training set")
    weights = {}
    for ctx in sorted(training):
        gen, imp = training[ctx]
        w, _ = cwma_train_context(gen, imp, grid_step)
        for cid, wi in zip(cids, w):
            weights[(ctx, cid)] = float(wi)
    return CwmaWeights(weights)
