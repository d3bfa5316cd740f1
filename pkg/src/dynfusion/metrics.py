"""FAR/FRR sweeps, DET curves and equal error rate.

Convention: scores are similarities, a trial is accepted when
``score >= threshold`` and rejected when ``score < threshold``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence, Tuple

import numba
import numpy as np


@dataclass(frozen=True)
class DetCurve:
    """Operating points at every distinct observed score, thresholds ascending."""

    thresholds: np.ndarray
    far: np.ndarray
    frr: np.ndarray

    def __len__(self):
        return len(self.thresholds)

    def points(self):
        return list(zip(self.thresholds.tolist(), self.far.tolist(), self.frr.tolist()))


def _as_scores(x, name) -> np.ndarray:
    arr = np.asarray(x, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError(f"{name} scores must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} scores must be finite")
    return arr


def far_frr(genuine, impostor, threshold: float) -> Tuple[float, float]:
    g = _as_scores(genuine, "genuine")
    i = _as_scores(impostor, "impostor")
    return float(np.mean(i >= threshold)), float(np.mean(g < threshold))


def det_curve(genuine, impostor) -> DetCurve:
    g = np.sort(_as_scores(genuine, "genuine"))
    i = np.sort(_as_scores(impostor, "impostor"))
    th = np.unique(np.concatenate([g, i]))
    far = (i.size - np.searchsorted(i, th, side="left")) / i.size
    frr = np.searchsorted(g, th, side="left") / g.size
    return DetCurve(th, far, frr)


def _crossing(far: np.ndarray, frr: np.ndarray) -> float:
    # first point where frr catches up with far; the curve starts at (1, 0)
    # and a final reject-everything point (0, 1) closes it
    far = np.append(far, 0.0)
    frr = np.append(frr, 1.0)
    d = far - frr
    k = int(np.argmax(d <= 0))
    if k == 0:
        return float(far[0])
    d0, d1 = d[k - 1], d[k]
    lam = d0 / (d0 - d1)
    return float(far[k - 1] + lam * (far[k] - far[k - 1]))


def eer(curve: DetCurve) -> float:
    """Error rate where the interpolated FAR and FRR curves cross."""
    return _crossing(curve.far, curve.frr)


def eer_from_scores(genuine, impostor) -> float:
    return eer(det_curve(genuine, impostor))


@numba.njit(cache=True)
def _eer_sorted_row(g, i):
    ng, ni = g.size, i.size
    far_prev, d_prev = 1.0, 1.0
    a = b = 0
    first = True
    while a < ng or b < ni:
        # next distinct threshold of the union
        if b >= ni or (a < ng and g[a] <= i[b]):
            x = g[a]
        else:
            x = i[b]
        far = (ni - b) / ni
        frr = a / ng
        d = far - frr
        if d <= 0:
            if first:
                return far
            lam = d_prev / (d_prev - d)
            return far_prev + lam * (far - far_prev)
        far_prev, d_prev = far, d
        first = False
        while a < ng and g[a] == x:
            a += 1
        while b < ni and i[b] == x:
            b += 1
    # reject-everything closing point (0, 1)
    far, frr = 0.0, 1.0
    d = far - frr
    lam = d_prev / (d_prev - d)
    return far_prev + lam * (far - far_prev)


@numba.njit(cache=True)
def _eer_sorted_rows(g, i):
    out = np.empty(g.shape[0])
    for r in range(g.shape[0]):
        out[r] = _eer_sorted_row(g[r], i[r])
    return out


def eer_rows(genuine: np.ndarray, impostor: np.ndarray) -> np.ndarray:
    """EER of each row pair ``(genuine[r], impostor[r])``.

    Same definition as :func:`eer_from_scores`, batched over rows by a merge
    walk over the separately sorted rows. Used by the CWMA grid search where
    thousands of weightings share one trial set.
    """
    g = np.sort(np.atleast_2d(np.asarray(genuine, dtype=float)), axis=1)
    i = np.sort(np.atleast_2d(np.asarray(impostor, dtype=float)), axis=1)
    if g.shape[0] != i.shape[0] or g.shape[1] == 0 or i.shape[1] == 0:
        raise ValueError("eer_rows needs the same number of non-empty genuine and impostor rows")
    return _eer_sorted_rows(g, i)


def write_det_csv(path, curve: DetCurve) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["threshold", "far", "frr"])
        for th, fa, fr in curve.points():
            w.writerow([repr(th), repr(fa), repr(fr)])
