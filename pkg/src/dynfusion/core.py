"""Shared domain types: score records, the per-classifier score history, errors."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List


class ConfigError(ValueError):
    """A configuration table is missing an entry or holds an out-of-range value."""


class ValidationError(ValueError):
    """Input data violates a precondition (non-finite score, malformed row, ...)."""


@dataclass(frozen=True, order=True)
class ScoreRecord:
    """One classifier score.

    ``t`` is simulated time in integer milliseconds. Scores are similarities:
    larger means more likely genuine.
    """

    cid: str
    alpha: float
    t: int


def _sort_key(rec: ScoreRecord):
    # alpha breaks timestamp ties so the stored order does not depend on insertion order
    return (rec.t, rec.alpha)


class History:
    """Time-ordered score lists, one per classifier.

    Window queries are strict: ``since(cid, t)`` returns records with
    ``record.t > t`` only.
    """

    def __init__(self, records: Iterable[ScoreRecord] = ()):
        self._lists: Dict[str, List[ScoreRecord]] = {}
        self._times: Dict[str, List[int]] = {}
        for rec in records:
            self.insert(rec)

    def insert(self, record: ScoreRecord) -> "History":
        if not math.isfinite(record.alpha):
            raise ValidationError(f"non-finite score {record.alpha!r} for classifier {record.cid!r}")
        recs = self._lists.setdefault(record.cid, [])
        times = self._times.setdefault(record.cid, [])
        idx = bisect.bisect_right(recs, _sort_key(record), key=_sort_key)
        recs.insert(idx, record)
        times.insert(idx, record.t)
        return self

    def extend(self, records: Iterable[ScoreRecord]) -> "History":
        for rec in records:
            self.insert(rec)
        return self

    def since(self, cid: str, t_bound: int) -> List[ScoreRecord]:
        """Records of ``cid`` with ``t > t_bound``, oldest first. Unknown cid gives []."""
        times = self._times.get(cid)
        if not times:
            return []
        return self._lists[cid][bisect.bisect_right(times, t_bound):]

    def records(self, cid: str) -> List[ScoreRecord]:
        return list(self._lists.get(cid, ()))

    def prune(self, t_keep: int) -> int:
        """Drop records with ``t <= t_keep``; returns how many were dropped."""
        dropped = 0
        for cid, times in self._times.items():
            cut = bisect.bisect_right(times, t_keep)
            if cut:
                del times[:cut]
                del self._lists[cid][:cut]
                dropped += cut
        return dropped

    @property
    def cids(self) -> List[str]:
        return sorted(self._lists)

    def copy(self) -> "History":
        new = History()
        new._lists = {k: list(v) for k, v in self._lists.items()}
        new._times = {k: list(v) for k, v in self._times.items()}
        return new

    def __iter__(self) -> Iterator[ScoreRecord]:
        for cid in self.cids:
            yield from self._lists[cid]

    def __len__(self) -> int:
        return sum(len(v) for v in self._lists.values())

    def __repr__(self) -> str:
        counts = ", ".join(f"{c}: {len(self._lists[c])}" for c in self.cids)
        return f"History({{{counts}}})"


def history_insert(history: History, record: ScoreRecord) -> History:
    return history.insert(record)


def history_since(history: History, cid: str, t_bound: int) -> List[ScoreRecord]:
    return history.since(cid, t_bound)
