"""Discrete-event continuous authentication loop.

:class:`AuthLoop` performs one iteration per call to :meth:`AuthLoop.step`:
ingest the scores that arrived, fuse, decide the device state, compute the
critical time, schedule classifiers and record the new activations.
:func:`run_scenario` drives it every ``dt_delay`` simulated milliseconds
against a scripted environment.
"""

from __future__ import annotations

import bisect
import csv
import enum
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from .core import ConfigError, History, ScoreRecord, ValidationError
from .fusion import FusedScore, NormParams, WindowPolicy, accepted, auth_window, critical_time, fuse
from .scheduler import ClassifierProfile, SchedulerParams, schedule
from .synthdata import GENUINE, IMPOSTOR, ScoreModel


class DeviceState(enum.Enum):
    LOCKED = "locked"
    UNLOCKED = "unlocked"


@dataclass(frozen=True)
class PolicyConfig:
    th_beta: float
    policy: WindowPolicy
    sched: SchedulerParams = field(default_factory=SchedulerParams)
    norm: Optional[NormParams] = None
    # once an unlocked device locks it stays locked until the user re-enrolls
    latch_lock: bool = True


@dataclass(frozen=True)
class PendingActivation:
    cid: str
    start: int
    completes_at: int


@dataclass(frozen=True)
class StepResult:
    t_now: int
    context: str
    beta: FusedScore
    state: DeviceState
    dt_crit: int
    scheduled: FrozenSet[str]
    activated: FrozenSet[str]
    completed: int


class AuthLoop:
    """State of one device: score history, in-flight captures, lock state."""

    def __init__(self, profile: ClassifierProfile, config: PolicyConfig, cids: Optional[Iterable[str]] = None):
        self.profile = profile
        self.config = config
        self.cids = sorted(cids if cids is not None else profile.cids)
        if not self.cids:
            raise ConfigError("the loop needs at least one classifier")
        self.history = History()
        self.pending: Dict[str, PendingActivation] = {}
        self.state = DeviceState.LOCKED
        self.t_last: Optional[int] = None
        self._latched = False

    def reenroll(self) -> None:
        """Explicit authentication by the user: clears a latched lock."""
        self._latched = False

    def due(self, t_now: int) -> List[PendingActivation]:
        """In-flight activations that have completed by ``t_now``."""
        return sorted((p for p in self.pending.values() if p.completes_at <= t_now),
                      key=lambda p: (p.completes_at, p.cid))

    def step(self, arrived: Sequence[Tuple[str, float, int]], context: str, t_now: int) -> StepResult:
        if self.t_last is not None and t_now <= self.t_last:
            raise ValueError(f"t_now must increase: {t_now} after {self.t_last}")
        cfg = self.config
        for cid, alpha, t in arrived:
            self.history.insert(ScoreRecord(cid, float(alpha), int(t)))
            self.pending.pop(cid, None)

        beta = fuse(self.cids, self.history, context, t_now, cfg.policy, cfg.norm)
        ok = accepted(beta, cfg.th_beta)
        if cfg.latch_lock and not ok and self.state is DeviceState.UNLOCKED:
            self._latched = True
        self.state = DeviceState.UNLOCKED if ok and not self._latched else DeviceState.LOCKED

        dt_crit = critical_time(self.cids, self.history, context, t_now, cfg.policy, cfg.norm, cfg.th_beta)
        scheduled = schedule(self.profile, self.cids, context, dt_crit, cfg.sched)
        activated = frozenset(cid for cid in scheduled if cid not in self.pending)
        for cid in activated:
            self.pending[cid] = PendingActivation(cid, t_now, t_now + self.profile.time(cid))

        # nothing at or before this bound can re-enter a window
        self.history.prune(t_now - cfg.policy.max_window - cfg.sched.dt_delay)
        self.t_last = t_now
        return StepResult(t_now, context, beta, self.state, dt_crit, scheduled, activated, len(arrived))


# -- scenarios --------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    start: int
    end: int
    context: str
    genuine: bool = True
    reenroll: bool = False


@dataclass(frozen=True)
class Scenario:
    """Piecewise-constant context and subject over ``[0, duration)``."""

    duration: int
    segments: Tuple[Segment, ...]
    seed: int = 0

    def __post_init__(self):
        if self.duration <= 0:
            raise ConfigError(f"scenario duration must be > 0, got {self.duration}")
        if not self.segments:
            raise ConfigError("scenario needs at least one segment")
        t = 0
        for seg in self.segments:
            if seg.start != t or seg.end <= seg.start:
                raise ConfigError(f"segments must tile [0, {self.duration}) in order; bad segment {seg}")
            t = seg.end
        if t != self.duration:
            raise ConfigError(f"segments end at {t}, scenario duration is {self.duration}")

    def segment_at(self, t: int) -> Segment:
        starts = [s.start for s in self.segments]
        idx = bisect.bisect_right(starts, t) - 1
        return self.segments[max(0, min(idx, len(self.segments) - 1))]

    @property
    def contexts(self) -> List[str]:
        return sorted({s.context for s in self.segments})


class ScoreSource(Protocol):
    def score(self, cid: str, context: str, genuine: bool, t: int, rng: np.random.Generator) -> float:
        ...


@dataclass
class SyntheticSource:
    model: ScoreModel

    def score(self, cid, context, genuine, t, rng):
        return float(self.model.draw(cid, context, GENUINE if genuine else IMPOSTOR, rng))


class ReplaySource:
    """Serves recorded scores: the latest record of ``cid`` at or before ``t``.

    Before the first record of a classifier, its first record is used.
    """

    def __init__(self, records: Iterable[ScoreRecord]):
        self._hist = History(records)

    def score(self, cid, context, genuine, t, rng):
        recs = self._hist.records(cid)
        if not recs:
            raise ValidationError(f"replay trace has no scores for classifier {cid!r}")
        times = [r.t for r in recs]
        idx = bisect.bisect_right(times, t) - 1
        return recs[max(idx, 0)].alpha


@dataclass(frozen=True)
class TraceRow:
    t_ms: int
    context: str
    beta: FusedScore
    state: DeviceState
    activated: FrozenSet[str]
    completed: int
    score_calcs: int
    dt_crit: int
    genuine: bool


TRACE_HEADER = ["t_ms", "context", "beta", "state", "activated", "completed", "score_calcs"]


def run_scenario(scenario: Scenario, config: PolicyConfig, profile: ClassifierProfile,
                 source: ScoreSource) -> List[TraceRow]:
    """Step the loop at ``0, dt_delay, 2*dt_delay, ... < duration``.

    A completed activation delivers a score stamped with its completion time,
    drawn for the context and subject present at that time.
    """
    for ctx in scenario.contexts:
        auth_window(config.policy, ctx)
        for cid in profile.cids:
            profile.auth_prob(cid, ctx)
    rng = np.random.default_rng(scenario.seed)
    loop = AuthLoop(profile, config)
    trace: List[TraceRow] = []
    calcs = 0
    reenrolled = set()
    t = 0
    while t < scenario.duration:
        seg = scenario.segment_at(t)
        if seg.reenroll and seg.start not in reenrolled:
            reenrolled.add(seg.start)
            loop.reenroll()
        arrived = []
        for p in loop.due(t):
            at = scenario.segment_at(p.completes_at)
            arrived.append((p.cid, source.score(p.cid, at.context, at.genuine, p.completes_at, rng), p.completes_at))
        res = loop.step(arrived, seg.context, t)
        calcs += res.completed
        trace.append(TraceRow(t, seg.context, res.beta, res.state, res.activated, res.completed, calcs,
                              res.dt_crit, seg.genuine))
        t += config.sched.dt_delay
    return trace


def write_trace_csv(path, trace: Iterable[TraceRow]) -> None:
    """Trace CSV; ``beta`` is empty when no score is in the window."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for row in trace:
            w.writerow([row.t_ms, row.context, "" if row.beta is None else repr(row.beta), row.state.value,
                        ";".join(sorted(row.activated)), row.completed, row.score_calcs])
