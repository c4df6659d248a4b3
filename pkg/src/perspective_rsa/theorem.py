"""Randomized check that occlusion makes a speaker favor more specific utterances.

For an utterance ``u0`` that mentions a strict superset of the dimensions of
``u1``, the claim is

    S_asym(u0) / S_asym(u1)  >  S_ego(u0) / S_ego(u1)

with the asymmetric speaker evaluated against a listener of weight 0 and the
same cost charged to both utterances.  Softmax normalizers cancel in each
ratio, so the comparison reduces to utility differences:

    [U_asym(u0) - U_asym(u1)] - [U_ego(u0) - U_ego(u1)]  >  0.

Two hypothesis sets are supported.  ``"stated"`` only requires positive hidden
mass on the separating patterns (true of ``u1`` but not ``u0``).  ``"corrected"``
additionally puts zero hidden mass on patterns that satisfy ``u0``; a hidden
object satisfying both utterances dilutes ``u0`` relatively more than ``u1``
and can reverse the inequality when ``u1`` already has many visible satisfiers.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .rng import as_generator
from .rsa import CostModel, RSAParams, speaker_utility_asym, speaker_utility_ego
from .semantics import (
    ALL_UTTERANCES,
    N_PATTERNS,
    ContextSpec,
    HiddenPrior,
    MatchPattern,
    Utterance,
    is_more_specific,
    truth_mask,
)

HYPOTHESES = ("stated", "corrected")
SPECIFIC_PAIRS = tuple((u0, u1) for u0, u1 in permutations(ALL_UTTERANCES, 2) if is_more_specific(u0, u1))
FLAT = RSAParams(cost=CostModel.flat(0.01))


@dataclass(frozen=True)
class Instance:
    ctx: ContextSpec
    u0: Utterance
    u1: Utterance


@dataclass(frozen=True)
class Violation:
    instance: Instance
    margin: float


@dataclass(frozen=True)
class TheoremReport:
    n: int
    hypothesis: str
    n_violations: int
    min_margin: float
    examples: tuple[Violation, ...] = ()


def separating_masks(u0: Utterance, u1: Utterance) -> list[int]:
    return [m for m in range(N_PATTERNS) if truth_mask(u1.mask, m) and not truth_mask(u0.mask, m)]


def margin(inst: Instance, params: RSAParams = FLAT) -> float:
    """Left side minus right side of the log-ratio inequality (positive = holds)."""
    ua = [speaker_utility_asym(u, inst.ctx, params, 0.0) for u in (inst.u0, inst.u1)]
    ue = [speaker_utility_ego(u, inst.ctx, params) for u in (inst.u0, inst.u1)]
    return (ua[0] - ua[1]) - (ue[0] - ue[1])


def random_instance(rng: np.random.Generator, hypothesis: str = "stated", max_shared: int = 6) -> Instance:
    """Random shared multiset, specific/less-specific pair and Dirichlet hidden prior."""
    if hypothesis not in HYPOTHESES:
        raise ValueError(f"unknown hypothesis {hypothesis!r}")
    n = int(rng.integers(max_shared + 1))
    shared = tuple(MatchPattern.from_mask(int(m)) for m in rng.integers(N_PATTERNS - 1, size=n))
    u0, u1 = SPECIFIC_PAIRS[int(rng.integers(len(SPECIFIC_PAIRS)))]
    if hypothesis == "stated":
        support = np.ones(N_PATTERNS, dtype=bool)
    else:
        support = np.array([not truth_mask(u0.mask, m) for m in range(N_PATTERNS)])
    w = np.zeros(N_PATTERNS)
    w[support] = rng.dirichlet(np.ones(int(support.sum())))
    # Dirichlet draws are positive almost surely; guard against underflow anyway
    sep = separating_masks(u0, u1)
    if w[sep].sum() <= 0:
        w[sep[0]] += 1e-3
    w = w / w.sum()
    return Instance(ContextSpec(shared, occluded=True, hidden_prior=HiddenPrior(tuple(w))), u0, u1)


def check_theorem(n: int = 10000, seed: int | np.random.Generator | None = 0, hypothesis: str = "stated",
                  params: RSAParams = FLAT, keep: int = 20) -> TheoremReport:
    """Evaluate ``n`` random instances; keeps the first ``keep`` violations."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = as_generator(seed, f"theorem/{hypothesis}")
    bad, count, lo = [], 0, np.inf
    for _ in range(n):
        inst = random_instance(rng, hypothesis)
        m = margin(inst, params)
        lo = min(lo, m)
        if not m > 0:
            count += 1
            if len(bad) < keep:
                bad.append(Violation(inst, m))
    return TheoremReport(n, hypothesis, count, float(lo), tuple(bad))
