"""Windowed two-dimensional score fusion.

Scores are z-normalized per classifier, averaged over time inside the
authentication window (sample fusion), then averaged across classifiers
(classifier fusion). An empty average is ``None``, which never passes a
threshold.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .core import ConfigError, History, ScoreRecord

FusedScore = Optional[float]


@dataclass(frozen=True)
class NormParams:
    """Per-classifier z-score parameters: cid -> (mean, population std)."""

    params: Mapping[str, Tuple[float, float]]

    def __post_init__(self):
        for cid, (mu, sigma) in self.params.items():
            if not (math.isfinite(mu) and math.isfinite(sigma)) or sigma <= 0:
                raise ConfigError(f"bad normalization for {cid!r}: mu={mu}, sigma={sigma}")

    @classmethod
    def identity(cls, cids: Iterable[str]) -> "NormParams":
        return cls({cid: (0.0, 1.0) for cid in cids})

    def __contains__(self, cid: str) -> bool:
        return cid in self.params

    def to_dict(self) -> Dict[str, Dict[str, float]]:
        return {cid: {"mu": mu, "sigma": sigma} for cid, (mu, sigma) in sorted(self.params.items())}


def zscore_fit(training_scores: Mapping[str, Sequence[float]]) -> NormParams:
    """Fit mean and population standard deviation for each classifier."""
    out = {}
    for cid, scores in training_scores.items():
        arr = np.asarray(scores, dtype=float)
        if arr.size < 2:
            raise ValueError(f"z-score fit for {cid!r} needs at least 2 scores, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"z-score fit for {cid!r}: non-finite training score")
        mu = float(arr.mean())
        sigma = float(arr.std())
        if sigma == 0.0:
            raise ValueError(f"z-score fit for {cid!r}: zero variance")
        out[cid] = (mu, sigma)
    return NormParams(out)


def zscore_apply(params: NormParams, cid: str, raw):
    """``(raw - mu) / sigma``; ``raw`` may be a scalar or an array."""
    try:
        mu, sigma = params.params[cid]
    except KeyError:
        raise ConfigError(f"no normalization parameters for classifier {cid!r}") from None
    return (raw - mu) / sigma


def _avg(values: Sequence[float]) -> FusedScore:
    if not values:
        return None
    # offsets from the minimum, summed exactly rounded: independent of input
    # order, and equal inputs average to themselves exactly
    lo = min(values)
    return lo + math.fsum(v - lo for v in values) / len(values)


def sample_fusion(scores: Sequence[float]) -> FusedScore:
    return _avg(list(scores))


def classifier_fusion(per_classifier: Iterable[FusedScore]) -> FusedScore:
    return _avg([b for b in per_classifier if b is not None])


def accepted(beta: FusedScore, th_beta: float) -> bool:
    """True when the fused score keeps the device unlocked."""
    return beta is not None and not beta < th_beta


@dataclass(frozen=True)
class WindowPolicy:
    windows: Mapping[str, int]  # context -> window length, ms

    def __post_init__(self):
        for ctx, w in self.windows.items():
            if w <= 0:
                raise ConfigError(f"window for context {ctx!r} must be > 0, got {w}")

    @property
    def max_window(self) -> int:
        return max(self.windows.values())


def auth_window(policy: WindowPolicy, context: str) -> int:
    try:
        return policy.windows[context]
    except KeyError:
        raise ConfigError(f"no authentication window for context {context!r}") from None


def _normalized(records: Sequence[ScoreRecord], norm: Optional[NormParams], cid: str) -> List[float]:
    if norm is None:
        return [r.alpha for r in records]
    mu_sigma = norm.params.get(cid)
    if mu_sigma is None:
        raise ConfigError(f"no normalization parameters for classifier {cid!r}")
    mu, sigma = mu_sigma
    return [(r.alpha - mu) / sigma for r in records]


def fuse(
    cids: Iterable[str],
    history: History,
    context: str,
    t_now: int,
    policy: WindowPolicy,
    norm: Optional[NormParams] = None,
) -> FusedScore:
    """Fused score over the window ``(t_now - window, +inf)``.

    ``norm=None`` treats the stored scores as already normalized.
    """
    t_bound = t_now - auth_window(policy, context)
    betas = []
    for cid in sorted(set(cids)):
        recs = history.since(cid, t_bound)
        betas.append(sample_fusion(_normalized(recs, norm, cid)))
    return classifier_fusion(betas)


def critical_time(
    cids: Iterable[str],
    history: History,
    context: str,
    t_now: int,
    policy: WindowPolicy,
    norm: Optional[NormParams],
    th_beta: float,
) -> int:
    """Milliseconds until the device locks if no further score arrives.

    The fused score only changes when a record drops out of the window: a
    record at ``t`` leaves once the window start reaches ``t``, i.e. after a
    shift of ``t - (t_now - window)``. Each such shift is tested in order and
    the first one whose fusion fails ``th_beta`` is returned (0 if the
    current fusion already fails).
    """
    cids = sorted(set(cids))
    t_start = t_now - auth_window(policy, context)

    # per classifier: times and normalized values of in-window records, oldest first
    per_cid = {}
    for cid in cids:
        recs = history.since(cid, t_start)
        if recs:
            per_cid[cid] = ([r.t for r in recs], _normalized(recs, norm, cid))

    def fused_after(shift: int) -> FusedScore:
        bound = t_start + shift
        betas = []
        for times, vals in per_cid.values():
            betas.append(sample_fusion(vals[bisect.bisect_right(times, bound):]))
        return classifier_fusion(betas)

    if not accepted(fused_after(0), th_beta):
        return 0
    shifts = sorted({t - t_start for times, _ in per_cid.values() for t in times})
    for shift in shifts:
        if not accepted(fused_after(shift), th_beta):
            return shift
    # unreachable: after the last shift every record has left and fusion is None
    raise AssertionError("critical time search did not terminate")
