"""Synthetic production and rating data for recovery checks."""
from __future__ import annotations

import numpy as np

from ..semantics import ALL_UTTERANCES, N_UTTERANCES
from .data import CONDITIONS, RatingRecord, TrialRecord
from .model import CELL_INDEX, ModelSpec, Theta, cell_speaker_probs

N_SPEAKERS = 83
TRIALS_PER_SPEAKER = 24
PRESENT_KINDS = CONDITIONS[1:]


def design(rng: np.random.Generator, trials_per_speaker: int = TRIALS_PER_SPEAKER) -> list[tuple[str, bool]]:
    """One speaker's (condition, occluded) sequence: balanced 2x2 cells, shuffled.

    Distractor-present trials draw their critical-distractor kind uniformly.
    """
    if trials_per_speaker % 4:
        raise ValueError("trials per speaker must be a multiple of 4")
    n = trials_per_speaker // 4
    cells = []
    for present in (False, True):
        for occ in (False, True):
            for _ in range(n):
                cond = PRESENT_KINDS[int(rng.integers(len(PRESENT_KINDS)))] if present else CONDITIONS[0]
                cells.append((cond, occ))
    order = rng.permutation(len(cells))
    return [cells[i] for i in order]


def generate_trials(theta: Theta, spec: ModelSpec, rng: np.random.Generator,
                    n_speakers: int = N_SPEAKERS,
                    trials_per_speaker: int = TRIALS_PER_SPEAKER) -> list[TrialRecord]:
    """Sample utterances from the lapse-mixed speaker of ``spec`` at ``theta``."""
    probs = cell_speaker_probs(theta, spec)
    probs = (1.0 - spec.lapse) * probs + spec.lapse / N_UTTERANCES
    out = []
    for s in range(n_speakers):
        for cond, occ in design(rng, trials_per_speaker):
            p = probs[CELL_INDEX[(cond, occ)]]
            u = ALL_UTTERANCES[int(rng.choice(N_UTTERANCES, p=p / p.sum()))]
            out.append(TrialRecord(f"s{s:03d}", cond, occ, u))
    return out


def generate_ratings(rng: np.random.Generator, gap: float, n_judges: int = 16, n_items: int = 8,
                     n_speakers: int = 20, speaker_sd: float = 8.0, rating_sd: float = 2.0,
                     base: float = 30.0) -> list[RatingRecord]:
    """Ratings whose true informativity gap (unscripted - scripted) is ``gap``.

    Each speaker produces one label per item; a label's informativity is the
    condition mean plus an i.i.d. speaker effect, and each judge's rating adds
    i.i.d. noise.  Distractor fit is held at a fixed level so the gap appears
    in target fit only.
    """
    out = []
    for cond in ("scripted", "unscripted"):
        mu = base + (gap if cond == "unscripted" else 0.0)
        for s in range(n_speakers):
            sid = f"{cond[0]}{s:02d}"
            eff = rng.normal(0.0, speaker_sd)
            for i in range(n_items):
                label = f"{sid}-i{i}"
                for j in range(n_judges):
                    t = float(np.clip(50.0 + (mu + eff) / 2 + rng.normal(0.0, rating_sd), 0, 100))
                    d = float(np.clip(50.0 - (mu + eff) / 2, 0, 100))
                    out.append(RatingRecord(f"j{j:02d}", f"i{i}", cond, sid, label, t, d))
    return out
