"""Context-aware classifier scheduling.

Picks the cheapest set of classifiers whose combined a priori success
probability is above ``th_p``, always including the classifiers that would
otherwise not finish a capture before the device locks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, Mapping, Optional

from .core import ConfigError

MAX_CLASSIFIERS = 16


@dataclass(frozen=True)
class ClassifierSpec:
    cid: str
    auth_prob: Mapping[str, float]  # context -> estimated true acceptance rate
    time_ms: int
    cost: float = 1.0

    def __post_init__(self):
        if self.time_ms <= 0:
            raise ConfigError(f"classifier {self.cid!r}: time_ms must be > 0, got {self.time_ms}")
        if self.cost < 0:
            raise ConfigError(f"classifier {self.cid!r}: cost must be >= 0, got {self.cost}")
        for ctx, p in self.auth_prob.items():
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"classifier {self.cid!r}: auth_prob[{ctx!r}]={p} outside [0, 1]")


@dataclass
class ClassifierProfile:
    """Static per-classifier tables.

    ``cost_fn`` replaces the default additive cost. It must be monotone
    (a superset never costs less than its subsets).
    """

    classifiers: Dict[str, ClassifierSpec]
    cost_fn: Optional[Callable[[FrozenSet[str]], float]] = field(default=None, compare=False)

    @classmethod
    def from_specs(cls, specs: Iterable[ClassifierSpec], cost_fn=None) -> "ClassifierProfile":
        table: Dict[str, ClassifierSpec] = {}
        for spec in specs:
            if spec.cid in table:
                raise ConfigError(f"duplicate classifier id {spec.cid!r}")
            table[spec.cid] = spec
        return cls(table, cost_fn)

    @property
    def cids(self) -> FrozenSet[str]:
        return frozenset(self.classifiers)

    def _spec(self, cid: str) -> ClassifierSpec:
        try:
            return self.classifiers[cid]
        except KeyError:
            raise ConfigError(f"unknown classifier {cid!r}") from None

    def auth_prob(self, cid: str, context: str) -> float:
        spec = self._spec(cid)
        try:
            return spec.auth_prob[context]
        except KeyError:
            raise ConfigError(f"no auth_prob for classifier {cid!r} in context {context!r}") from None

    def time(self, cid: str) -> int:
        return self._spec(cid).time_ms

    def cost(self, subset: Iterable[str]) -> float:
        subset = frozenset(subset)
        if self.cost_fn is not None:
            return self.cost_fn(subset)
        # fsum is exactly rounded, so the total does not depend on iteration order
        return math.fsum(self._spec(cid).cost for cid in subset)


@dataclass(frozen=True)
class SchedulerParams:
    th_p: float = 0.9
    dt_delay: int = 1000

    def __post_init__(self):
        if not 0.0 <= self.th_p <= 1.0:
            raise ConfigError(f"th_p must be in [0, 1], got {self.th_p}")
        if self.dt_delay <= 0:
            raise ConfigError(f"dt_delay must be > 0, got {self.dt_delay}")


def combined_prob(profile: ClassifierProfile, subset: Iterable[str], context: str) -> float:
    """Probability that at least one classifier in ``subset`` accepts, assuming independence."""
    miss = 1.0
    for cid in sorted(subset):
        miss *= 1.0 - profile.auth_prob(cid, context)
    return 1.0 - miss


def time_critical(profile: ClassifierProfile, all_cids: Iterable[str], dt_crit: int, dt_delay: int) -> FrozenSet[str]:
    return frozenset(cid for cid in all_cids if profile.time(cid) + dt_delay >= dt_crit)


def schedule(
    profile: ClassifierProfile,
    all_cids: Iterable[str],
    context: str,
    dt_crit: int,
    params: SchedulerParams,
) -> FrozenSet[str]:
    """Classifier ids to activate now.

    Every subset of ``all_cids`` is a candidate when its combined probability
    is strictly above ``th_p``; the time-critical classifiers are added to it
    and the union is costed. The cheapest union wins, ties going to the
    lexicographically smallest sorted id tuple. With no candidate, all
    classifiers are activated.
    """
    cids = sorted(set(all_cids))
    if not cids:
        raise ConfigError("schedule needs at least one classifier")
    if len(cids) > MAX_CLASSIFIERS:
        raise ConfigError(f"subset enumeration capped at {MAX_CLASSIFIERS} classifiers, got {len(cids)}")
    if dt_crit < 0:
        raise ValueError(f"dt_crit must be >= 0, got {dt_crit}")

    crit = time_critical(profile, cids, dt_crit, params.dt_delay)

    best_key = None
    best: Optional[FrozenSet[str]] = None
    for r in range(len(cids) + 1):
        for sub in itertools.combinations(cids, r):
            if combined_prob(profile, sub, context) <= params.th_p:
                continue
            cand = crit.union(sub)
            key = (profile.cost(cand), tuple(sorted(cand)))
            if best_key is None or key < best_key:
                best_key, best = key, cand

    if best is None:
        return frozenset(cids)
    return best
