"""Trial and rating records, with CSV readers/writers that report row numbers."""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import Iterable

from ..semantics import Utterance

CONDITIONS = ("distractor_absent", "same_shape", "same_shape_color", "same_shape_texture")
TRIAL_COLUMNS = ("speaker_id", "condition", "occluded", "mention_shape", "mention_color", "mention_texture")
RATING_CONDITIONS = ("scripted", "unscripted")
RATING_COLUMNS = ("judge_id", "item_id", "condition", "speaker_id", "label_id", "target_fit", "distractor_fit")
FIT_SCALE = (0.0, 100.0)


class DataError(ValueError):
    """Malformed input file; ``row`` is the 1-based line number in the file."""

    def __init__(self, message: str, row: int | None = None, path: str | None = None):
        where = ""
        if path:
            where += f"{path}:"
        if row is not None:
            where += f"row {row}: "
        elif where:
            where += " "
        super().__init__(where + message)
        self.row = row
        self.path = path


@dataclass(frozen=True)
class TrialRecord:
    speaker_id: str
    condition: str
    occluded: bool
    mentioned: Utterance

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise ValueError(f"unknown condition {self.condition!r}")

    @property
    def distractor_present(self) -> bool:
        return self.condition != "distractor_absent"


@dataclass(frozen=True)
class RatingRecord:
    judge_id: str
    item_id: str
    condition: str
    speaker_id: str
    label_id: str
    target_fit: float
    distractor_fit: float

    def __post_init__(self):
        if self.condition not in RATING_CONDITIONS:
            raise ValueError(f"unknown rating condition {self.condition!r}")
        lo, hi = FIT_SCALE
        for name in ("target_fit", "distractor_fit"):
            v = getattr(self, name)
            if not (math.isfinite(v) and lo <= v <= hi):
                raise ValueError(f"{name} must lie in [{lo:g}, {hi:g}], got {v}")

    @property
    def informativity(self) -> float:
        return self.target_fit - self.distractor_fit


def _flag(text: str, name: str) -> bool:
    t = text.strip()
    if t not in ("0", "1"):
        raise ValueError(f"{name} must be 0 or 1, got {text!r}")
    return t == "1"


def _reader(fh: io.TextIOBase, columns: tuple[str, ...], path: str | None):
    """Yield (line number, row dict); leading ``#`` comment lines are skipped."""
    lines = iter(enumerate(fh, start=1))
    first = 0
    for first, line in lines:
        if not line.startswith("#"):
            break
    else:
        raise DataError("empty file (missing header)", path=path)
    header = [h.strip() for h in next(csv.reader([line]))]
    if tuple(header) != columns:
        raise DataError(f"expected header {','.join(columns)}, got {','.join(header)}", row=first, path=path)
    numbered = ((i, line) for i, line in lines)
    for i, row in ((i, r) for i, line in numbered for r in csv.reader([line])):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(columns):
            raise DataError(f"expected {len(columns)} fields, got {len(row)}", row=i, path=path)
        yield i, dict(zip(columns, (c.strip() for c in row)))


def _open(path_or_fh):
    if isinstance(path_or_fh, (str, os.PathLike)):
        return open(path_or_fh, newline=""), os.fspath(path_or_fh)
    return path_or_fh, None


def read_trials(path_or_fh) -> list[TrialRecord]:
    fh, path = _open(path_or_fh)
    try:
        out = []
        for i, r in _reader(fh, TRIAL_COLUMNS, path):
            try:
                flags = [_flag(r[f"mention_{d}"], f"mention_{d}") for d in ("shape", "color", "texture")]
                if r["condition"] not in CONDITIONS:
                    raise ValueError(f"unknown condition {r['condition']!r}")
                if not any(flags):
                    raise ValueError("empty utterance (no dimension mentioned)")
                mask = sum(1 << d for d, f in enumerate(flags) if f)
                out.append(TrialRecord(r["speaker_id"], r["condition"], _flag(r["occluded"], "occluded"),
                                       Utterance(mask)))
            except ValueError as e:
                raise DataError(str(e), row=i, path=path) from None
        return out
    finally:
        if path is not None:
            fh.close()


def write_trials(records: Iterable[TrialRecord], path_or_fh) -> None:
    fh, path = (open(path_or_fh, "w", newline=""), path_or_fh) \
        if isinstance(path_or_fh, (str, os.PathLike)) else (path_or_fh, None)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRIAL_COLUMNS)
        for t in records:
            m = t.mentioned.mask
            w.writerow([t.speaker_id, t.condition, int(t.occluded), m & 1, m >> 1 & 1, m >> 2 & 1])
    finally:
        if path is not None:
            fh.close()


def read_ratings(path_or_fh) -> list[RatingRecord]:
    fh, path = _open(path_or_fh)
    try:
        out = []
        for i, r in _reader(fh, RATING_COLUMNS, path):
            try:
                out.append(RatingRecord(r["judge_id"], r["item_id"], r["condition"], r["speaker_id"],
                                        r["label_id"], float(r["target_fit"]), float(r["distractor_fit"])))
            except ValueError as e:
                raise DataError(str(e), row=i, path=path) from None
        return out
    finally:
        if path is not None:
            fh.close()


def write_ratings(records: Iterable[RatingRecord], path_or_fh) -> None:
    fh, path = (open(path_or_fh, "w", newline=""), path_or_fh) \
        if isinstance(path_or_fh, (str, os.PathLike)) else (path_or_fh, None)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RATING_COLUMNS)
        for r in records:
            w.writerow([r.judge_id, r.item_id, r.condition, r.speaker_id, r.label_id,
                        repr(r.target_fit), repr(r.distractor_fit)])
    finally:
        if path is not None:
            fh.close()
