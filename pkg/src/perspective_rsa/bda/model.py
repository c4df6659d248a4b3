"""Speaker likelihood for production data in the four abstract context kinds.

Each trial is scored by a perspective-weighted speaker mixed with a lapse
(uniform guessing over the 7 utterances).  The non-critical filler that
shares color or texture with the target is marginalized as an even mixture
of the two filler kinds, outside the speaker's normalization.

Parameters live in sampler coordinates ``phi = (alpha, w_S, log c_shape,
log c_color, log c_texture)``, where every prior is flat.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .._kernels import kernels
from ..rsa import speaker_tables, weight_grid
from ..semantics import ALL_UTTERANCES, N_UTTERANCES, ContextSpec, HiddenPrior, MatchPattern, UTTERANCE_INDEX
from .data import CONDITIONS, TrialRecord

PARAM_NAMES = ("alpha", "ws", "c_shape", "c_color", "c_texture")
PHI_NAMES = ("alpha", "ws", "log_c_shape", "log_c_color", "log_c_texture")
PHI_LO = np.array([0.0, 0.0, -10.0, -10.0, -10.0])
PHI_HI = np.array([1000.0, 1.0, 1.0, 1.0, 1.0])
DEFAULT_LAPSE = 0.05

CRITICAL_MASK = {"distractor_absent": None, "same_shape": 1,
                 "same_shape_color": 3, "same_shape_texture": 5}
FILLER_MASKS = (2, 4)
CELLS = tuple((c, occ) for c in CONDITIONS for occ in (False, True))
CELL_INDEX = {cell: g for g, cell in enumerate(CELLS)}
UMASK = np.array([u.mask for u in ALL_UTTERANCES], dtype=np.int_)
N_FEATURES = np.array([u.length for u in ALL_UTTERANCES], dtype=float)


class Theta(NamedTuple):
    alpha: float
    ws: float
    c_shape: float
    c_color: float
    c_texture: float

    def to_phi(self) -> np.ndarray:
        return np.array([self.alpha, self.ws, np.log(self.c_shape), np.log(self.c_color),
                         np.log(self.c_texture)])

    @classmethod
    def from_phi(cls, phi: Sequence[float]) -> "Theta":
        return cls(float(phi[0]), float(phi[1]), *(float(np.exp(x)) for x in phi[2:5]))

    def in_support(self) -> bool:
        phi = self.to_phi()
        return bool(np.all(phi >= PHI_LO) and np.all(phi <= PHI_HI))


VARIANT_WS = {"egocentric": 0.0, "occlusion_sensitive": 1.0, "mixture": None}


@dataclass(frozen=True)
class ModelSpec:
    """Which parameters are free.

    ``egocentric`` pins ``w_S = 0``, ``occlusion_sensitive`` pins ``w_S = 1``
    and ``mixture`` leaves it free.  ``fixed`` pins further parameters (by name,
    natural units) to build reduced models.
    """

    variant: str = "mixture"
    fixed: tuple[tuple[str, float], ...] = ()
    lapse: float = DEFAULT_LAPSE
    w_grid: tuple[float, ...] = weight_grid(0.05)

    def __post_init__(self):
        if self.variant not in VARIANT_WS:
            raise ValueError(f"unknown model variant {self.variant!r}")
        fixed = tuple((str(k), float(v)) for k, v in dict(self.fixed).items())
        for k, _ in fixed:
            if k not in PARAM_NAMES:
                raise ValueError(f"unknown parameter {k!r}")
        object.__setattr__(self, "fixed", fixed)
        if not 0.0 <= self.lapse <= 1.0:
            raise ValueError("lapse must lie in [0, 1]")

    @classmethod
    def parse(cls, name: str) -> "ModelSpec":
        return cls(name.replace("-", "_"))

    @property
    def pinned(self) -> dict[int, float]:
        """Index -> phi value for every parameter not sampled."""
        out = {}
        if VARIANT_WS[self.variant] is not None:
            out[1] = VARIANT_WS[self.variant]
        for k, v in self.fixed:
            i = PARAM_NAMES.index(k)
            out[i] = v if i < 2 else float(np.log(v))
        return out

    @property
    def free(self) -> np.ndarray:
        f = np.ones(len(PARAM_NAMES), dtype=bool)
        for i in self.pinned:
            f[i] = False
        return f

    @property
    def n_params(self) -> int:
        return int(self.free.sum())

    def complete(self, phi: Sequence[float]) -> np.ndarray:
        """Overwrite pinned coordinates of a full-length phi."""
        out = np.array(phi, dtype=float)
        for i, v in self.pinned.items():
            out[i] = v
        return out

    def sample_prior(self, rng: np.random.Generator) -> np.ndarray:
        return self.complete(rng.uniform(PHI_LO, PHI_HI))

    def log_prior_volume(self) -> float:
        return float(np.log(PHI_HI - PHI_LO)[self.free].sum())


def cell_contexts(condition: str, occluded: bool,
                  hidden_prior: HiddenPrior | None = None) -> list[tuple[ContextSpec, float]]:
    """Abstract speaker contexts (with mixture weights) for one condition."""
    crit = CRITICAL_MASK[condition]
    prior = hidden_prior or HiddenPrior.uniform()
    out = []
    for f in FILLER_MASKS:
        shared = tuple(MatchPattern.from_mask(m) for m in ((crit,) if crit is not None else ()) + (f,))
        out.append((ContextSpec(shared, occluded=occluded, hidden_prior=prior), 1.0 / len(FILLER_MASKS)))
    return out


@dataclass(frozen=True, eq=False)
class LikelihoodTables:
    """Precomputed informativity terms for every context, plus data counts per cell."""

    info_asym: np.ndarray  # [K, U, W]
    info_ego: np.ndarray  # [K, U]
    valid: np.ndarray  # [K, U] uint8
    occluded: np.ndarray  # [K] uint8
    log_wprior: np.ndarray  # [W]
    group_weights: np.ndarray  # [G, K]
    counts: np.ndarray  # [G, U]
    lapse: float

    def as_tuple(self) -> tuple:
        return (self.info_asym, self.info_ego, self.valid, self.occluded, self.log_wprior, UMASK,
                self.group_weights, self.counts, self.lapse)

    @property
    def n_trials(self) -> int:
        return int(self.counts.sum())

    def loglik(self, phi: Sequence[float], backend=None) -> float:
        k = backend or kernels
        return float(k.loglik(*self.as_tuple()[:7], self.counts, self.lapse, np.asarray(phi, dtype=float)))

    def speaker_logp(self, phi: Sequence[float], backend=None) -> np.ndarray:
        k = backend or kernels
        return k.speaker_logp(self.info_asym, self.info_ego, self.valid, self.occluded,
                              self.log_wprior, UMASK, np.asarray(phi, dtype=float))


@lru_cache(maxsize=8)
def _base_tables(w_grid: tuple[float, ...]):
    ia, ie, valid, occ, gw = [], [], [], [], np.zeros((len(CELLS), len(CELLS) * len(FILLER_MASKS)))
    k = 0
    for g, (cond, o) in enumerate(CELLS):
        for ctx, w in cell_contexts(cond, o):
            t = speaker_tables(ctx, w_grid)
            # invalid entries are masked in the kernel; keep the arithmetic finite
            ia.append(np.where(t.valid[:, None], t.asym, 0.0))
            ie.append(np.where(t.valid, t.ego, 0.0))
            valid.append(t.valid.astype(np.uint8))
            occ.append(int(o))
            gw[g, k] = w
            k += 1
    return (np.ascontiguousarray(ia), np.ascontiguousarray(ie), np.ascontiguousarray(valid),
            np.array(occ, dtype=np.uint8), gw)


def cell_counts(trials: Iterable[TrialRecord]) -> np.ndarray:
    counts = np.zeros((len(CELLS), N_UTTERANCES))
    for t in trials:
        counts[CELL_INDEX[(t.condition, t.occluded)], UTTERANCE_INDEX[t.mentioned.mask]] += 1
    return counts


def build_tables(trials: Iterable[TrialRecord], spec: ModelSpec = ModelSpec(),
                 counts: np.ndarray | None = None) -> LikelihoodTables:
    ia, ie, valid, occ, gw = (a.copy() for a in _base_tables(spec.w_grid))
    lw = np.full(len(spec.w_grid), -np.log(len(spec.w_grid)))
    c = cell_counts(trials) if counts is None else np.asarray(counts, dtype=float)
    return LikelihoodTables(ia, ie, valid, occ, lw, gw, np.ascontiguousarray(c), spec.lapse)


def _phi(theta: Theta | Sequence[float], spec: ModelSpec) -> np.ndarray:
    phi = theta.to_phi() if isinstance(theta, Theta) else np.asarray(theta, dtype=float)
    return spec.complete(phi)


def cell_speaker_probs(theta: Theta | Sequence[float], spec: ModelSpec = ModelSpec()) -> np.ndarray:
    """Filler-marginalized speaker probabilities ``[cell, utterance]`` (no lapse)."""
    tables = build_tables((), spec)
    p = np.exp(tables.speaker_logp(_phi(theta, spec)))
    return tables.group_weights @ p


def trial_likelihood(t: TrialRecord, theta: Theta | Sequence[float], spec: ModelSpec = ModelSpec()) -> float:
    """Log-probability of one trial's utterance, including the lapse."""
    p = cell_speaker_probs(theta, spec)[CELL_INDEX[(t.condition, t.occluded)], UTTERANCE_INDEX[t.mentioned.mask]]
    return float(np.log((1.0 - spec.lapse) * p + spec.lapse / N_UTTERANCES))


def log_likelihood(trials: Sequence[TrialRecord], theta: Theta | Sequence[float],
                   spec: ModelSpec = ModelSpec()) -> float:
    return build_tables(trials, spec).loglik(_phi(theta, spec))


DESIGN_CELLS = ((False, False), (False, True), (True, False), (True, True))


def expected_features(theta: Theta | Sequence[float], spec: ModelSpec = ModelSpec()) -> dict[tuple[bool, bool], float]:
    """Expected number of mentioned features per (distractor_present, occluded) cell.

    Distractor-present cells average the three critical-distractor kinds equally.
    """
    per_cell = cell_speaker_probs(theta, spec) @ N_FEATURES
    out = {}
    for present, occ in DESIGN_CELLS:
        conds = [c for c in CONDITIONS if (c != "distractor_absent") == present]
        out[(present, occ)] = float(np.mean([per_cell[CELL_INDEX[(c, occ)]] for c in conds]))
    return out
