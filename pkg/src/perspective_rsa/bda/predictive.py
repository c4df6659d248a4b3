"""Posterior predictive expected feature counts per 2x2 design cell."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import CELL_INDEX, DESIGN_CELLS, N_FEATURES, ModelSpec, build_tables
from .data import CONDITIONS
from .sampling import PosteriorSamples


@dataclass(frozen=True)
class CellPrediction:
    distractor_present: bool
    occluded: bool
    mean: float
    lo: float
    hi: float


def _cell_features(per_cell: np.ndarray) -> dict[tuple[bool, bool], np.ndarray]:
    """Average the per-condition expectations ``[..., G]`` into the 2x2 design."""
    out = {}
    for present, occ in DESIGN_CELLS:
        conds = [c for c in CONDITIONS if (c != "distractor_absent") == present]
        out[(present, occ)] = np.mean([per_cell[..., CELL_INDEX[(c, occ)]] for c in conds], axis=0)
    return out


def draw_features(samples: PosteriorSamples | np.ndarray, spec: ModelSpec | None = None) -> np.ndarray:
    """Expected features mentioned (no lapse), ``[draw, G]`` over condition x occlusion cells."""
    phi = samples.phi if isinstance(samples, PosteriorSamples) else np.atleast_2d(samples)
    spec = spec or samples.spec
    if phi.shape[0] == 0:
        raise ValueError("no posterior draws")
    tables = build_tables((), spec)
    out = np.empty((phi.shape[0], tables.group_weights.shape[0]))
    for i, row in enumerate(phi):
        p = np.exp(tables.speaker_logp(spec.complete(row)))
        out[i] = tables.group_weights @ p @ N_FEATURES
    return out


def posterior_predictive_features(samples: PosteriorSamples | np.ndarray, spec: ModelSpec | None = None,
                                  mass: float = 0.95) -> list[CellPrediction]:
    """Mean and central ``mass`` band of the expected feature count per design cell.

    Distractor-present cells average the three critical-distractor kinds.
    """
    per = _cell_features(draw_features(samples, spec))
    tail = (1.0 - mass) / 2 * 100
    out = []
    for (present, occ), x in per.items():
        lo, hi = np.percentile(x, [tail, 100 - tail])
        out.append(CellPrediction(present, occ, float(x.mean()), float(lo), float(hi)))
    return out
