"""Calibrated synthetic score models and trial sets.

Each (classifier, context) pair gets an equal-variance Gaussian pair:
impostor scores ~ N(0, 1), genuine scores ~ N(mu_g, 1). The EER of such a
pair is Phi(-mu_g / 2), so a target EER fixes mu_g exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm as _std_normal

from .baselines import CwmaWeights, fuse_max, fuse_sum
from .core import ConfigError, History, ScoreRecord
from .fusion import NormParams, WindowPolicy, auth_window, fuse, zscore_apply
from .metrics import eer_from_scores
from .scheduler import ClassifierProfile, SchedulerParams, schedule

GENUINE = "genuine"
IMPOSTOR = "impostor"


def calibrate(target_eer: float) -> float:
    """Genuine mean giving the equal-variance Gaussian pair the target EER."""
    if not 0.0 < target_eer < 0.5:
        raise ValueError(f"target EER must lie in (0, 0.5), got {target_eer}")
    return float(-2.0 * _std_normal.ppf(target_eer))


def analytic_eer(mu_g: float) -> float:
    return float(_std_normal.cdf(-mu_g / 2.0))


@dataclass(frozen=True)
class ScoreModel:
    genuine_means: Mapping[Tuple[str, str], float]  # (cid, context) -> mu_g

    def __post_init__(self):
        for key, mu in self.genuine_means.items():
            if not mu > 0:
                raise ConfigError(f"genuine mean for {key} must be > 0, got {mu}")

    @classmethod
    def from_eer_targets(cls, targets: Mapping[Tuple[str, str], float]) -> "ScoreModel":
        return cls({key: calibrate(eer) for key, eer in targets.items()})

    def mu(self, cid: str, context: str) -> float:
        try:
            return self.genuine_means[(cid, context)]
        except KeyError:
            raise ConfigError(f"no score model for classifier {cid!r} in context {context!r}") from None

    def eer(self, cid: str, context: str) -> float:
        return analytic_eer(self.mu(cid, context))

    def draw(self, cid: str, context: str, label: str, rng: np.random.Generator, size=None):
        mean = self.mu(cid, context) if _is_genuine(label) else 0.0
        return rng.normal(mean, 1.0, size)


def _is_genuine(label) -> bool:
    if label in (GENUINE, True):
        return True
    if label in (IMPOSTOR, False):
        return False
    raise ValueError(f"label must be 'genuine' or 'impostor', got {label!r}")


def draw_score(model: ScoreModel, cid: str, context: str, label: str, rng: np.random.Generator) -> float:
    return float(model.draw(cid, context, label, rng))


def draw_matrix(model: ScoreModel, cids: Sequence[str], context: str, label: str, n: int,
                rng: np.random.Generator) -> np.ndarray:
    """Raw scores, one row per trial, one column per classifier in ``cids`` order."""
    return np.column_stack([model.draw(cid, context, label, rng, n) for cid in cids])


def draw_training(model: ScoreModel, cids: Sequence[str], contexts: Iterable[str], n: int,
                  rng: np.random.Generator) -> Dict[str, Tuple[np.ndarray, np.ndarray]]:
    """context -> (genuine, impostor) raw score matrices of shape ``(n, len(cids))``."""
    out = {}
    for ctx in contexts:
        out[ctx] = (draw_matrix(model, cids, ctx, GENUINE, n, rng),
                    draw_matrix(model, cids, ctx, IMPOSTOR, n, rng))
    return out


def estimate_auth_prob(training: Mapping[str, Tuple[np.ndarray, np.ndarray]],
                       cids: Sequence[str]) -> Dict[str, Dict[str, float]]:
    """cid -> context -> true acceptance rate at the training EER point (1 - EER)."""
    out: Dict[str, Dict[str, float]] = {cid: {} for cid in cids}
    for ctx, (gen, imp) in training.items():
        for j, cid in enumerate(cids):
            out[cid][ctx] = 1.0 - eer_from_scores(gen[:, j], imp[:, j])
    return out


# -- trial sets -------------------------------------------------------------

_OUR = re.compile(r"^our_(\d+)x$")
_SINGLE = re.compile(r"^single_(.+)$")


def parse_approach(approach: str) -> Tuple[str, Optional[str]]:
    """Split an approach name into (kind, argument).

    ``max``, ``sum``, ``cwma``, ``our_<k>x`` (k >= 1) and ``single_<cid>``.
    """
    if approach in ("max", "sum", "cwma"):
        return approach, None
    m = _OUR.match(approach)
    if m and int(m.group(1)) >= 1:
        return "our", m.group(1)
    m = _SINGLE.match(approach)
    if m:
        return "single", m.group(1)
    raise ConfigError(f"unknown approach {approach!r}")


@dataclass
class FusionSetup:
    """Everything a fusion approach needs besides the score model."""

    cids: List[str]
    profile: ClassifierProfile
    policy: WindowPolicy
    norm: NormParams
    sched: SchedulerParams
    cwma: Optional[CwmaWeights] = None


@dataclass
class ContextTrials:
    genuine: np.ndarray
    impostor: np.ndarray
    score_calcs: np.ndarray  # per trial, genuine trials first

    @property
    def calcs_per_trial(self) -> float:
        return float(self.score_calcs.mean())


@dataclass
class TrialSet:
    approach: str
    contexts: Dict[str, ContextTrials] = field(default_factory=dict)

    def eer(self, context: str) -> float:
        ct = self.contexts[context]
        return eer_from_scores(ct.genuine, ct.impostor)


def _normalize_matrix(raw: np.ndarray, cids: Sequence[str], norm: NormParams) -> np.ndarray:
    return np.column_stack([zscore_apply(norm, cid, raw[:, j]) for j, cid in enumerate(cids)])


def _parallel_scores(kind: str, arg, model, ctx, label, n, setup: FusionSetup, rng):
    if kind == "single":
        if arg not in setup.cids:
            raise ConfigError(f"unknown classifier {arg!r} in approach single_{arg}")
        cids = [arg]
    else:
        cids = setup.cids
    z = _normalize_matrix(draw_matrix(model, cids, ctx, label, n, rng), cids, setup.norm)
    if kind == "max":
        fused = fuse_max(z)
    elif kind == "sum":
        fused = fuse_sum(z)
    elif kind == "cwma":
        if setup.cwma is None:
            raise ConfigError("approach cwma needs trained weights")
        fused = z @ setup.cwma.vector(ctx, cids)
    else:
        fused = z[:, 0]
    return np.asarray(fused, dtype=float), np.full(n, len(cids))


def our_trial(model: ScoreModel, ctx: str, label: str, k: int, setup: FusionSetup,
              rng: np.random.Generator, scheduled=None) -> Tuple[Optional[float], int]:
    """One trial of the scheduled approach at ``k`` successive instants.

    Instants are ``dt_delay`` apart. The scheduler runs in steady state (the
    device was just authenticated, so the whole window remains before the
    critical time). Each activated classifier delivers its score ``Time(cid)``
    after the instant; the trial is decided by windowed fusion once the last
    score is in. Returns (fused score, number of score calculations).
    """
    window = auth_window(setup.policy, ctx)
    hist = History()
    t_last = 0
    for j in range(k):
        t_j = j * setup.sched.dt_delay
        act = scheduled if scheduled is not None else schedule(setup.profile, setup.cids, ctx, window, setup.sched)
        for cid in sorted(act):
            t = t_j + setup.profile.time(cid)
            hist.insert(ScoreRecord(cid, draw_score(model, cid, ctx, label, rng), t))
            t_last = max(t_last, t)
    return fuse(setup.cids, hist, ctx, t_last, setup.policy, setup.norm), len(hist)


def build_trials(model: ScoreModel, approach: str, contexts: Iterable[str], n_trials: int,
                 setup: FusionSetup, rng: np.random.Generator) -> TrialSet:
    """Fused genuine and impostor scores for ``n_trials`` trials per context."""
    if n_trials <= 0:
        raise ValueError(f"n_trials must be > 0, got {n_trials}")
    kind, arg = parse_approach(approach)
    out = TrialSet(approach)
    for ctx in contexts:
        scores = {}
        calcs = []
        for label in (GENUINE, IMPOSTOR):
            if kind == "our":
                k = int(arg)
                window = auth_window(setup.policy, ctx)
                # inputs do not change between instants, so neither does the schedule
                act = schedule(setup.profile, setup.cids, ctx, window, setup.sched)
                fused = np.empty(n_trials)
                n_calc = np.empty(n_trials, dtype=int)
                for r in range(n_trials):
                    beta, n_calc[r] = our_trial(model, ctx, label, k, setup, rng, act)
                    # an empty window cannot occur here: every instant schedules at least one classifier
                    fused[r] = beta
            else:
                fused, n_calc = _parallel_scores(kind, arg, model, ctx, label, n_trials, setup, rng)
            scores[label] = fused
            calcs.append(n_calc)
        out.contexts[ctx] = ContextTrials(scores[GENUINE], scores[IMPOSTOR], np.concatenate(calcs))
    return out
