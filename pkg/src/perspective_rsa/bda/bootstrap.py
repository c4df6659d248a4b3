"""Multi-stage non-parametric bootstrap for rating informativity.

One replicate resamples judges, then items, then speakers within each
condition, and returns the difference of condition means (unscripted minus
scripted).  Resampling with replacement is encoded as multiplicity vectors, so
all replicates are computed with a few matrix products.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..rng import substream
from .data import RATING_CONDITIONS, RatingRecord


class BootstrapError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    estimate: float
    ci_low: float
    ci_high: float
    level: float
    replicates: np.ndarray
    seed: int

    @property
    def width(self) -> float:
        return self.ci_high - self.ci_low

    def covers(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high


def _index(keys: Sequence[str]) -> tuple[list[str], np.ndarray]:
    uniq = sorted(set(keys))
    pos = {k: i for i, k in enumerate(uniq)}
    return uniq, np.array([pos[k] for k in keys], dtype=np.intp)


class _Design:
    """Ratings arranged as label x judge sums and counts."""

    def __init__(self, ratings: Sequence[RatingRecord]):
        if not ratings:
            raise BootstrapError("no ratings")
        self.judges, jidx = _index([r.judge_id for r in ratings])
        self.labels, lidx = _index([r.label_id for r in ratings])
        self.items, _ = _index([r.item_id for r in ratings])
        L, J = len(self.labels), len(self.judges)
        self.sums = np.zeros((L, J))
        self.counts = np.zeros((L, J))
        np.add.at(self.sums, (lidx, jidx), [r.informativity for r in ratings])
        np.add.at(self.counts, (lidx, jidx), 1.0)

        meta: dict[str, tuple[str, str, str]] = {}
        for r in ratings:
            key = (r.condition, r.speaker_id, r.item_id)
            if meta.setdefault(r.label_id, key) != key:
                raise BootstrapError(f"label {r.label_id!r} has inconsistent condition/speaker/item")
        item_pos = {k: i for i, k in enumerate(self.items)}
        self.label_item = np.array([item_pos[meta[l][2]] for l in self.labels], dtype=np.intp)
        self.label_cond = np.array([meta[l][0] for l in self.labels])
        self.speakers: dict[str, list[str]] = {}
        self.label_speaker: dict[str, np.ndarray] = {}
        for cond in RATING_CONDITIONS:
            sel = self.label_cond == cond
            if not sel.any():
                raise BootstrapError(f"condition {cond!r} has no ratings")
            spk = sorted({meta[l][1] for l, s in zip(self.labels, sel) if s})
            pos = {k: i for i, k in enumerate(spk)}
            self.speakers[cond] = spk
            self.label_speaker[cond] = np.array([pos[meta[l][1]] if s else -1
                                                 for l, s in zip(self.labels, sel)], dtype=np.intp)

    def statistic(self, mj: np.ndarray, mi: np.ndarray, ms: dict[str, np.ndarray]) -> np.ndarray:
        """Difference of condition means for multiplicities of shape ``[R, n]``."""
        num = mj @ self.sums.T  # [R, L]
        den = mj @ self.counts.T
        has = den > 0
        info = np.divide(num, den, out=np.zeros_like(num), where=has)
        item_w = mi[:, self.label_item]
        means = {}
        for cond in RATING_CONDITIONS:
            sel = self.label_cond == cond
            w = item_w[:, sel] * ms[cond][:, self.label_speaker[cond][sel]] * has[:, sel]
            tot = w.sum(axis=1)
            with np.errstate(invalid="ignore", divide="ignore"):
                means[cond] = (w * info[:, sel]).sum(axis=1) / tot
        return means["unscripted"] - means["scripted"]


def _multiplicities(rng: np.random.Generator, n: int, replicates: int) -> np.ndarray:
    return rng.multinomial(n, np.full(n, 1.0 / n), size=replicates).astype(float)


def multistage_bootstrap(ratings: Sequence[RatingRecord], replicates: int = 1000, seed: int = 0,
                         level: float = 0.95) -> BootstrapResult:
    """Informativity difference (unscripted - scripted) with a percentile interval.

    Replicates in which resampling leaves a condition without any rated label
    are discarded (they have no defined mean); if every replicate is discarded
    the call fails.
    """
    if replicates < 1:
        raise ValueError("need at least one replicate")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    d = _Design(ratings)
    ones = lambda n: np.ones((1, n))
    estimate = float(d.statistic(ones(len(d.judges)), ones(len(d.items)),
                                 {c: ones(len(d.speakers[c])) for c in RATING_CONDITIONS})[0])

    rng = substream(seed, "bootstrap")
    mj = _multiplicities(rng, len(d.judges), replicates)
    mi = _multiplicities(rng, len(d.items), replicates)
    ms = {c: _multiplicities(rng, len(d.speakers[c]), replicates) for c in RATING_CONDITIONS}
    stats = d.statistic(mj, mi, ms)
    stats = stats[np.isfinite(stats)]
    if stats.size == 0:
        raise BootstrapError("every bootstrap replicate was degenerate")
    tail = (1.0 - level) / 2 * 100
    lo, hi = np.percentile(stats, [tail, 100 - tail])
    return BootstrapResult(estimate, float(lo), float(hi), level, stats, seed)
