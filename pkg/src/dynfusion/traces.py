"""Score-trace CSV files: header ``cid,alpha,t_ms``, one score per row."""

from __future__ import annotations

import csv
import math
from typing import Iterable, List

from .core import ScoreRecord, ValidationError

HEADER = ["cid", "alpha", "t_ms"]


def parse_trace(path) -> List[ScoreRecord]:
    """Read a score trace; records come back in file order.

    Row numbers in error messages count the header as row 1.
    """
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != HEADER:
            raise ValidationError(f"{path}: row 1: expected header {','.join(HEADER)!r}, got {header!r}")
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ValidationError(f"{path}: row {row_no}: expected 3 fields, got {len(row)}")
            cid, alpha_s, t_s = (c.strip() for c in row)
            if not cid:
                raise ValidationError(f"{path}: row {row_no}: empty classifier id")
            try:
                alpha = float(alpha_s)
            except ValueError:
                raise ValidationError(f"{path}: row {row_no}: alpha {alpha_s!r} is not a number") from None
            if not math.isfinite(alpha):
                raise ValidationError(f"{path}: row {row_no}: alpha must be finite, got {alpha_s!r}")
            try:
                t = int(t_s)
            except ValueError:
                raise ValidationError(f"{path}: row {row_no}: t_ms {t_s!r} is not an integer") from None
            if t < 0:
                raise ValidationError(f"{path}: row {row_no}: t_ms must be >= 0, got {t}")
            records.append(ScoreRecord(cid, alpha, t))
    return records


def write_trace(path, records: Iterable[ScoreRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for rec in records:
            # repr round-trips floats exactly
            w.writerow([rec.cid, repr(float(rec.alpha)), int(rec.t)])
